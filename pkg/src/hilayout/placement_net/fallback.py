"""Rule-based placement fallback: canonical offsets per relation phrase.

Serves as both the no-checkpoint path and the ablation baseline where
fixed coordinates replace network predictions.
"""

from __future__ import annotations

from .. import relations
from ..scene_model import RelationEdge, SceneHierarchy, THETAS
from .network import PredictedPlacement


class UnknownRelation(Exception):
    pass


def rule_fallback(
    edge: RelationEdge,
    anchor_footprint: tuple[float, float],
    obj_footprint: tuple[float, float],
    mirror_index: int = 0,
) -> PredictedPlacement:
    """Deterministic placement for a textual relation edge."""
    if edge.text is None or edge.text not in relations.VOCABULARY:
        raise UnknownRelation(f"relation {edge.from_id}->{edge.to_id} has unknown phrase {edge.text!r}")
    position, theta = relations.canonical_offset(edge.text, anchor_footprint, obj_footprint, mirror_index)
    dist = tuple(1.0 if t == theta else 0.0 for t in THETAS)
    aligned = relations.is_aligned(position, theta)
    return PredictedPlacement(rel_position=position, rel_theta=dist, aligned_prob=1.0 if aligned else 0.0)


def rule_placements(hierarchy: SceneHierarchy) -> dict[tuple[str, str], PredictedPlacement]:
    """Fallback predictions for every textual anchor edge in the scene.

    Satellites without a textual relation get a spread of "next to" slots
    around their anchor so the solver still has a target for them.
    """
    out: dict[tuple[str, str], PredictedPlacement] = {}
    for area in hierarchy.areas:
        anchor = hierarchy.objects[area.anchor_object]
        edge_by_from = {
            e.from_id: e
            for e in hierarchy.relations
            if e.to_id == area.anchor_object and e.text is not None
        }
        mirror = 0
        for oid in area.members:
            if oid == area.anchor_object:
                continue
            obj = hierarchy.objects[oid]
            edge = edge_by_from.get(oid)
            if edge is None:
                edge = RelationEdge(from_id=oid, to_id=area.anchor_object, text="next to")
            if edge.text == "next to":
                out[(oid, area.anchor_object)] = rule_fallback(
                    edge, anchor.footprint, obj.footprint, mirror
                )
                mirror += 1
            else:
                out[(oid, area.anchor_object)] = rule_fallback(edge, anchor.footprint, obj.footprint)
    return out
