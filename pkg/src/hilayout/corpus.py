"""Desk-scale training corpus.

A seeded procedural generator draws bedroom / living-room scenes from
templates: an anchor per area plus satellites at jittered canonical
offsets, ground-truth relative placements computed with the same REL
operator the solver uses, and the alignment flag from the shared
predicate.  Every generated hierarchy is feasible by construction (no
overlap, nothing outside its area).

Also ships an adapter that ingests scene files in a 3D-Front-style JSON
layout, clustering objects around anchor categories into functional areas
and rejecting irregular floors.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import relations
from .scene_model import (
    AreaPose,
    FunctionalArea,
    Pose2D,
    RelationEdge,
    SceneHierarchy,
    SceneObject,
    SceneRoot,
    rel,
    validate_hierarchy,
)

ANCHOR_CATEGORIES = ("bed", "sofa", "table", "desk", "wardrobe")
CLUSTER_RADIUS = 2.5


class IoError(Exception):
    pass


class FormatError(Exception):
    pass


@dataclass(frozen=True)
class SatelliteSpec:
    """One satellite slot: relation, sizes, and offset distribution.

    Offset means and jitters are chosen so each coordinate's support stays
    strictly inside one 0.75 m evaluation-histogram bin; the jitter is what
    the latent has to explain, the bin margins are what keeps the KL metric
    stable.
    """

    category: str
    text: str
    relation: str
    size: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    align_theta: bool = False   # same orientation as anchor instead of facing it
    lateral_base: float = 0.0
    lateral_jitter: float = 0.04
    gap_base: float = 0.08
    gap_jitter: float = 0.05
    probability: float = 1.0


@dataclass(frozen=True)
class AreaTemplate:
    kind: str
    text: str
    anchor_category: str
    anchor_text: str
    anchor_size: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    satellites: tuple[SatelliteSpec, ...]
    margin: float = 0.35


def _srange(lo_w, hi_w, lo_d, hi_d, lo_h, hi_h):
    return ((lo_w, hi_w), (lo_d, hi_d), (lo_h, hi_h))


SLEEPING = AreaTemplate(
    kind="sleeping",
    text="sleeping area with a double bed",
    anchor_category="bed",
    anchor_text="double bed",
    anchor_size=_srange(1.4, 1.8, 1.9, 2.1, 0.45, 0.6),
    satellites=(
        SatelliteSpec("nightstand", "wooden nightstand", "left of",
                      _srange(0.4, 0.55, 0.35, 0.45, 0.45, 0.6), align_theta=True,
                      lateral_base=-0.35),
        SatelliteSpec("nightstand", "wooden nightstand", "right of",
                      _srange(0.4, 0.55, 0.35, 0.45, 0.45, 0.6), align_theta=True,
                      lateral_base=-0.35, probability=0.85),
        SatelliteSpec("bench", "upholstered bench", "in front of",
                      _srange(0.9, 1.2, 0.35, 0.45, 0.4, 0.5), align_theta=True,
                      lateral_base=-0.15, lateral_jitter=0.03, probability=0.35),
    ),
)

STUDY = AreaTemplate(
    kind="study",
    text="study corner with a desk",
    anchor_category="desk",
    anchor_text="wooden study desk",
    anchor_size=_srange(1.2, 1.4, 0.55, 0.65, 0.72, 0.78),
    satellites=(
        SatelliteSpec("chair", "desk chair", "in front of",
                      _srange(0.42, 0.5, 0.45, 0.52, 0.85, 0.95),
                      lateral_base=-0.15, lateral_jitter=0.03, gap_base=0.06),
        SatelliteSpec("lamp", "slim floor lamp", "next to",
                      _srange(0.25, 0.35, 0.25, 0.35, 1.4, 1.6),
                      lateral_base=-0.2, gap_base=0.12, probability=0.6),
    ),
)

STORAGE = AreaTemplate(
    kind="storage",
    text="storage corner",
    anchor_category="wardrobe",
    anchor_text="tall wardrobe",
    anchor_size=_srange(1.0, 1.6, 0.55, 0.65, 1.9, 2.2),
    satellites=(
        # Flush alignment with the wardrobe: the corpus' aligned=True slot.
        SatelliteSpec("dresser", "chest of drawers", "next to",
                      _srange(0.8, 1.0, 0.4, 0.5, 0.8, 1.0), align_theta=True,
                      lateral_base=0.0, lateral_jitter=0.02, probability=0.7),
    ),
)

SEATING = AreaTemplate(
    kind="seating",
    text="seating area around a sofa",
    anchor_category="sofa",
    anchor_text="fabric sofa",
    anchor_size=_srange(1.8, 2.2, 0.85, 1.0, 0.75, 0.9),
    satellites=(
        SatelliteSpec("table", "coffee table", "in front of",
                      _srange(0.9, 1.2, 0.5, 0.65, 0.4, 0.5), align_theta=True,
                      lateral_base=-0.18, lateral_jitter=0.03, gap_base=0.3, gap_jitter=0.08),
        SatelliteSpec("tv stand", "low tv stand", "in front of",
                      _srange(1.4, 1.8, 0.4, 0.5, 0.45, 0.55),
                      lateral_base=-0.2, gap_base=1.35, gap_jitter=0.05, probability=0.8),
        SatelliteSpec("side table", "small side table", "next to",
                      _srange(0.4, 0.5, 0.4, 0.5, 0.5, 0.6), align_theta=True,
                      lateral_base=-0.2, gap_base=0.05, gap_jitter=0.03, probability=0.5),
    ),
)

DINING = AreaTemplate(
    kind="dining",
    text="dining area",
    anchor_category="table",
    anchor_text="dining table",
    anchor_size=_srange(1.2, 1.7, 0.9, 1.0, 0.73, 0.78),
    satellites=(
        SatelliteSpec("chair", "dining chair", "left of",
                      _srange(0.42, 0.48, 0.45, 0.52, 0.85, 0.95),
                      lateral_base=-0.2, lateral_jitter=0.03, gap_base=0.06),
        SatelliteSpec("chair", "dining chair", "right of",
                      _srange(0.42, 0.48, 0.45, 0.52, 0.85, 0.95),
                      lateral_base=-0.2, lateral_jitter=0.03, gap_base=0.06),
        SatelliteSpec("chair", "dining chair", "in front of",
                      _srange(0.42, 0.48, 0.45, 0.52, 0.85, 0.95),
                      lateral_base=-0.2, lateral_jitter=0.03, gap_base=0.15, probability=0.75),
        SatelliteSpec("chair", "dining chair", "behind",
                      _srange(0.42, 0.48, 0.45, 0.52, 0.85, 0.95),
                      lateral_base=-0.2, lateral_jitter=0.03, gap_base=0.15, probability=0.75),
    ),
)

BEDROOM_TEMPLATES = (SLEEPING, STUDY, STORAGE)
LIVING_TEMPLATES = (SEATING, DINING)


def _draw(rng, lo_hi):
    return round(float(rng.uniform(lo_hi[0], lo_hi[1])), 3)


def _relation_direction(phrase: str, mirror: int = 0) -> tuple[float, float]:
    if phrase == "left of":
        return (-1.0, 0.0)
    if phrase == "right of":
        return (1.0, 0.0)
    if phrase == "in front of":
        return (0.0, 1.0)
    if phrase == "behind":
        return (0.0, -1.0)
    if phrase == "next to":
        return (1.0, 0.0) if mirror % 2 == 0 else (-1.0, 0.0)
    raise KeyError(phrase)


def _facing_theta(direction: tuple[float, float]) -> int:
    # Object faces back toward the anchor.
    dx, dy = direction
    if dx < 0:
        return 90
    if dx > 0:
        return 270
    if dy > 0:
        return 180
    return 0


def _build_area(template: AreaTemplate, rng, counter) -> tuple[FunctionalArea, dict, list[RelationEdge]]:
    anchor_size = tuple(_draw(rng, r) for r in template.anchor_size)
    anchor_id = f"{template.anchor_category.replace(' ', '_')}_{next(counter)}"
    objects = {
        anchor_id: SceneObject(
            id=anchor_id,
            text=template.anchor_text,
            category=template.anchor_category,
            size=anchor_size,
            pose=Pose2D((0.0, 0.0), 0),
        )
    }
    edges = []
    mirror = 0
    placed = [((0.0, 0.0), (anchor_size[0] / 2, anchor_size[1] / 2))]

    for spec in template.satellites:
        if rng.random() > spec.probability:
            continue
        size = tuple(_draw(rng, r) for r in spec.size)
        direction = _relation_direction(spec.relation, mirror)
        if spec.relation == "next to":
            mirror += 1
        theta = 0 if spec.align_theta else _facing_theta(direction)
        hw, hd = (size[0] / 2, size[1] / 2) if theta % 180 == 0 else (size[1] / 2, size[0] / 2)
        anchor_half = anchor_size[0] / 2 if direction[0] != 0 else anchor_size[1] / 2
        own_half = hw if direction[0] != 0 else hd
        gap = spec.gap_base + float(rng.uniform(0.0, spec.gap_jitter))
        along = anchor_half + own_half + gap
        lateral = spec.lateral_base + float(rng.normal(0.0, spec.lateral_jitter))
        x = direction[0] * along + (0.0 if direction[0] != 0 else lateral)
        y = direction[1] * along + (0.0 if direction[1] != 0 else lateral)

        # Reject overlaps with already-placed members (jitter is small, so
        # simply push outward along the relation direction until clear).
        for _ in range(20):
            clear = True
            for (px, py), (phw, phd) in placed:
                if abs(x - px) < hw + phw and abs(y - py) < hd + phd:
                    clear = False
                    break
            if clear:
                break
            x += direction[0] * 0.1
            y += direction[1] * 0.1

        oid = f"{spec.category.replace(' ', '_')}_{next(counter)}"
        pose = Pose2D((round(x, 4), round(y, 4)), theta)
        objects[oid] = SceneObject(id=oid, text=spec.text, category=spec.category, size=size, pose=pose)
        placed.append(((pose.center[0], pose.center[1]), (hw, hd)))

        rel_position, rel_theta = rel(pose, Pose2D((0.0, 0.0), 0))
        edges.append(
            RelationEdge(
                from_id=oid,
                to_id=anchor_id,
                text=spec.relation,
                rel_position=rel_position,
                rel_theta=rel_theta,
                aligned=relations.is_aligned(rel_position, rel_theta),
            )
        )

    # Area sized to contain every member at its drawn position.
    margin = template.margin + float(rng.uniform(0.0, 0.15))
    extent_x = max(abs(c[0]) + h[0] for c, h in placed)
    extent_y = max(abs(c[1]) + h[1] for c, h in placed)
    area_size = (round(2 * (extent_x + margin), 3), round(2 * (extent_y + margin), 3))
    area = FunctionalArea(
        id=f"{template.kind}_area_{next(counter)}",
        text=template.text,
        size=area_size,
        anchor_object=anchor_id,
        members=tuple(objects),
    )
    return area, objects, edges


def _scene_from_templates(kind: str, templates, rng) -> SceneHierarchy:
    ids = iter(range(1000))
    areas, objects, edges = [], {}, []
    for template in templates:
        area, objs, es = _build_area(template, rng, ids)
        areas.append(area)
        objects.update(objs)
        edges.extend(es)

    max_w = max(a.size[0] for a in areas)
    sum_d = sum(a.size[1] for a in areas)
    room_w = round(max(max_w + 0.6, 3.2), 2)
    room_d = round(max(sum_d + 0.8, 3.2), 2)
    while sum(a.size[0] * a.size[1] for a in areas) > 0.85 * room_w * room_d:
        room_w = round(room_w * 1.05, 2)
        room_d = round(room_d * 1.05, 2)

    text = f"a {kind} with " + " and ".join(a.text for a in areas)
    return SceneHierarchy(
        root=SceneRoot(text=text, size=(room_w, room_d)),
        areas=tuple(areas),
        objects=objects,
        relations=tuple(edges),
    )


def generate(n: int, seed: int = 0) -> list[SceneHierarchy]:
    """Generate ``n`` ground-truth hierarchies, alternating scene kinds."""
    if n <= 0:
        raise ValueError("n must be positive")
    scenes = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        if i % 2 == 0:
            templates = [SLEEPING]
            roll = rng.random()
            if roll < 0.45:
                templates.append(STUDY)
            elif roll < 0.8:
                templates.append(STORAGE)
            scene = _scene_from_templates("bedroom", templates, rng)
        else:
            templates = [SEATING]
            if rng.random() < 0.8:
                templates.append(DINING)
            scene = _scene_from_templates("living room", templates, rng)
        issues = validate_hierarchy(scene)
        if issues:
            raise AssertionError(f"generator produced invalid scene {i}: {issues}")
        scenes.append(scene)
    return scenes


def strip_ground_truth(h: SceneHierarchy) -> SceneHierarchy:
    """Drop poses and numeric placements, keeping text and sizes only."""
    objects = {oid: replace(o, pose=None) for oid, o in h.objects.items()}
    areas = tuple(replace(a, pose=None) for a in h.areas)
    edges = tuple(
        RelationEdge(from_id=e.from_id, to_id=e.to_id, text=e.text) for e in h.relations
    )
    return SceneHierarchy(root=h.root, areas=areas, objects=objects, relations=edges)


def reference_layout(h: SceneHierarchy):
    """Compose ground-truth poses into a scene layout for metric reference.

    Areas are stacked along the room depth, centered; relative placements
    inside an area are invariant to this rigid arrangement.
    """
    from .scene_model import to_scene_frame

    gap = 0.2
    total = sum(a.size[1] for a in h.areas) + gap * (len(h.areas) - 1)
    cursor = -total / 2.0
    solved = h
    for area in h.areas:
        center = (0.0, cursor + area.size[1] / 2.0)
        solved = solved.with_area_pose(area.id, AreaPose(center, "+y"))
        cursor += area.size[1] + gap
    return to_scene_frame(solved)


# ---------------------------------------------------------------------------
# 3D-Front-style ingestion
# ---------------------------------------------------------------------------


@dataclass
class IngestReport:
    accepted: int = 0
    rejected_irregular: int = 0
    rejected_malformed: int = 0
    dropped_objects: list[str] = field(default_factory=list)


def _is_axis_aligned_rectangle(polygon: list[list[float]]) -> bool:
    pts = [tuple(p) for p in polygon]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) != 4:
        return False
    xs = sorted({round(p[0], 6) for p in pts})
    ys = sorted({round(p[1], 6) for p in pts})
    if len(xs) != 2 or len(ys) != 2:
        return False
    corners = {(x, y) for x in xs for y in ys}
    return {(round(p[0], 6), round(p[1], 6)) for p in pts} == corners


def ingest_3dfront(path, anchor_categories=ANCHOR_CATEGORIES) -> tuple[list[SceneHierarchy], IngestReport]:
    """Map scene JSON files in the documented layout onto hierarchies.

    Scenes with non-rectangular floors are rejected; objects cluster to
    the nearest anchor within 2.5 m and the rest are dropped.
    """
    if not os.path.isdir(path):
        raise IoError(f"not a directory: {path}")
    report = IngestReport()
    hierarchies = []
    for name in sorted(os.listdir(path)):
        if not name.endswith(".json"):
            continue
        full = os.path.join(path, name)
        try:
            with open(full, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"{name}: {exc}") from exc

        floor = data.get("floor")
        furniture = data.get("furniture")
        if not isinstance(floor, list) or not isinstance(furniture, list):
            report.rejected_malformed += 1
            continue
        if not _is_axis_aligned_rectangle(floor):
            report.rejected_irregular += 1
            continue

        xs = [p[0] for p in floor]
        ys = [p[1] for p in floor]
        room = (max(xs) - min(xs), max(ys) - min(ys))
        cx, cy = (max(xs) + min(xs)) / 2, (max(ys) + min(ys)) / 2

        items = []
        for k, item in enumerate(furniture):
            try:
                pose = Pose2D(
                    (float(item["position"][0]) - cx, float(item["position"][1]) - cy),
                    int(item.get("theta", 0)) % 360,
                )
                obj = SceneObject(
                    id=f"{item['category'].replace(' ', '_')}_{k}",
                    text=item.get("text", item["category"]),
                    category=item["category"],
                    size=tuple(float(v) for v in item["size"]),
                    pose=pose,
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{name}[{k}]: {exc}") from exc
            items.append(obj)

        anchors = [o for o in items if o.category in anchor_categories]
        if not anchors:
            report.rejected_malformed += 1
            continue

        clusters: dict[str, list[SceneObject]] = {a.id: [a] for a in anchors}
        for obj in items:
            if obj in anchors:
                continue
            best, best_d = None, CLUSTER_RADIUS
            for a in anchors:
                d = math.hypot(obj.pose.center[0] - a.pose.center[0], obj.pose.center[1] - a.pose.center[1])
                if d < best_d:
                    best, best_d = a, d
            if best is None:
                report.dropped_objects.append(f"{data.get('uid', name)}:{obj.id}")
            else:
                clusters[best.id].append(obj)

        areas, objects, edges = [], {}, []
        for ai, (anchor_id, members) in enumerate(clusters.items()):
            anchor = members[0]
            min_x = min(o.pose.center[0] - o.size[0] / 2 for o in members)
            max_x = max(o.pose.center[0] + o.size[0] / 2 for o in members)
            min_y = min(o.pose.center[1] - o.size[1] / 2 for o in members)
            max_y = max(o.pose.center[1] + o.size[1] / 2 for o in members)
            area_pose = AreaPose(((min_x + max_x) / 2, (min_y + max_y) / 2), "+y")
            area_as_pose = Pose2D(area_pose.center, 0)
            local = {}
            for o in members:
                (lx, ly), lt = rel(o.pose, area_as_pose)
                local[o.id] = Pose2D((lx, ly), lt)
            for o in members[1:]:
                rel_position, rel_theta = rel(o.pose, anchor.pose)
                edges.append(
                    RelationEdge(
                        from_id=o.id,
                        to_id=anchor_id,
                        text=None,
                        rel_position=rel_position,
                        rel_theta=rel_theta,
                        aligned=relations.is_aligned(rel_position, rel_theta),
                    )
                )
            for o in members:
                objects[o.id] = replace(o, pose=local[o.id])
            areas.append(
                FunctionalArea(
                    id=f"area_{ai}",
                    text=f"{anchor.category} area",
                    size=(round(max_x - min_x + 0.2, 3), round(max_y - min_y + 0.2, 3)),
                    anchor_object=anchor_id,
                    members=tuple(o.id for o in members),
                    pose=area_pose,
                )
            )

        hierarchies.append(
            SceneHierarchy(
                root=SceneRoot(text=data.get("text", data.get("room_type", "a room")), size=room),
                areas=tuple(areas),
                objects=objects,
                relations=tuple(edges),
            )
        )
        report.accepted += 1
    return hierarchies, report
