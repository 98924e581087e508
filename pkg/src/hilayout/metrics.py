"""Evaluation metrics: feasibility rates, relative-placement KL, semantic alignment.

Feasibility is scored per scene (binary violation, then averaged).  The KL
metric histograms satellite-in-anchor-frame positions for configured
category pairs on an 8x8 grid over [-3, 3]^2 m with additive smoothing,
and compares reference against generated scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import relations
from .geometry import max_protrusion, overlap_area
from .layout_solver import object_boxes
from .scene_model import Pose2D, SceneHierarchy, SceneLayout, rel

DEFAULT_PAIRS = (("bed", "nightstand"), ("table", "chair"), ("table", "sofa"))

OOB_PROTRUSION_LIMIT = 0.01   # meters past the floor before a scene counts OOB
OVERLAP_LIMIT = 1e-4          # m^2 of pair overlap before a scene counts overlapping
HIST_RANGE = 3.0
HIST_BINS = 8
HIST_BINS_ALT = 16
SMOOTHING = 1e-3
MIN_SAMPLES = 30


class InsufficientSamples(Exception):
    def __init__(self, pair, side, count):
        self.pair = pair
        super().__init__(f"pair {pair[0]}-{pair[1]}: {count} {side} samples, need {MIN_SAMPLES}")


class UnknownRelation(Exception):
    pass


@dataclass
class MetricReport:
    scene_count: int = 0
    oob_rate: float = 0.0
    overlap_rate: float = 0.0
    kl_div: float = 0.0
    kl_per_pair: dict = field(default_factory=dict)
    kl_div_alt_bins: float = 0.0
    rel_match: float = 0.0
    obj_match: float = 0.0


def feasibility_metrics(scenes: list[SceneLayout]) -> tuple[float, float]:
    """Per-scene binary OOB / overlap violations, averaged over scenes."""
    if not scenes:
        raise ValueError("no scenes to evaluate")
    oob_scenes = 0
    overlap_scenes = 0
    for layout in scenes:
        room = layout.hierarchy.root.size
        boxes = object_boxes(layout)
        ids = sorted(boxes)
        if any(max_protrusion(boxes[i], room) > OOB_PROTRUSION_LIMIT for i in ids):
            oob_scenes += 1
        clash = False
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                if overlap_area(boxes[a], boxes[b]) > OVERLAP_LIMIT:
                    clash = True
                    break
            if clash:
                break
        if clash:
            overlap_scenes += 1
    n = len(scenes)
    return oob_scenes / n, overlap_scenes / n


def _collect_pair_positions(scenes: list[SceneLayout], pair: tuple[str, str]) -> np.ndarray:
    anchor_cat, sat_cat = pair
    points = []
    for layout in scenes:
        h = layout.hierarchy
        for area in h.areas:
            anchors = [o for o in area.members if h.objects[o].category == anchor_cat]
            sats = [o for o in area.members if h.objects[o].category == sat_cat]
            for a in anchors:
                for s in sats:
                    if a == s:
                        continue
                    pa = layout.object_poses.get(a)
                    ps = layout.object_poses.get(s)
                    if pa is None or ps is None:
                        continue
                    (x, y), _ = rel(ps, pa)
                    points.append((x, y))
    return np.array(points, dtype=np.float64).reshape(-1, 2)


def _smoothed_histogram(points: np.ndarray, bins: int) -> np.ndarray:
    clipped = np.clip(points, -HIST_RANGE, HIST_RANGE - 1e-9)
    edges = np.linspace(-HIST_RANGE, HIST_RANGE, bins + 1)
    hist, _, _ = np.histogram2d(clipped[:, 0], clipped[:, 1], bins=(edges, edges))
    flat = hist.ravel()
    return (flat + SMOOTHING) / (flat.sum() + SMOOTHING * flat.size)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * np.log(p / q)))


def kl_relative_placement(
    generated: list[SceneLayout],
    reference: list[SceneLayout],
    pairs=DEFAULT_PAIRS,
) -> tuple[float, dict]:
    """Average KL(reference || generated) of pair placement histograms."""
    per_pair = {}
    for pair in pairs:
        gen_pts = _collect_pair_positions(generated, pair)
        ref_pts = _collect_pair_positions(reference, pair)
        if len(ref_pts) < MIN_SAMPLES:
            raise InsufficientSamples(pair, "reference", len(ref_pts))
        if len(gen_pts) < MIN_SAMPLES:
            raise InsufficientSamples(pair, "generated", len(gen_pts))
        kl_main = _kl(_smoothed_histogram(ref_pts, HIST_BINS), _smoothed_histogram(gen_pts, HIST_BINS))
        kl_alt = _kl(
            _smoothed_histogram(ref_pts, HIST_BINS_ALT), _smoothed_histogram(gen_pts, HIST_BINS_ALT)
        )
        per_pair[f"{pair[0]}-{pair[1]}"] = {"kl": kl_main, "kl_alt_bins": kl_alt,
                                            "n_ref": len(ref_pts), "n_gen": len(gen_pts)}
    avg = sum(v["kl"] for v in per_pair.values()) / len(per_pair)
    return avg, per_pair


def _oriented_footprint(size, theta) -> tuple[float, float]:
    w, d = size[0], size[1]
    return (d, w) if theta % 180 == 90 else (w, d)


def semantic_alignment(
    items: list[tuple[SceneHierarchy, SceneLayout]],
) -> tuple[float, float]:
    """(#Rel, #Obj): relation predicates satisfied and objects placed.

    The hierarchy side of each pair is the originally specified scene
    (before any feasibility repair), so dropped objects count against both
    scores.
    """
    total_rel = matched_rel = 0
    total_obj = placed_obj = 0
    for source, layout in items:
        for oid in source.objects:
            total_obj += 1
            if oid in layout.object_poses:
                placed_obj += 1
        for edge in source.relations:
            if edge.text is None:
                continue
            if edge.text not in relations.VOCABULARY:
                raise UnknownRelation(edge.text)
            total_rel += 1
            pa = layout.object_poses.get(edge.to_id)
            ps = layout.object_poses.get(edge.from_id)
            if pa is None or ps is None:
                continue
            (x, y), rel_theta = rel(ps, pa)
            anchor_obj = source.objects[edge.to_id]
            sat_obj = source.objects[edge.from_id]
            anchor_fp = _oriented_footprint(anchor_obj.size, 0)
            sat_fp = _oriented_footprint(sat_obj.size, rel_theta)
            if relations.predicate_holds(edge.text, (x, y), anchor_fp, sat_fp):
                matched_rel += 1
    rel_match = matched_rel / total_rel if total_rel else 1.0
    obj_match = placed_obj / total_obj if total_obj else 1.0
    return rel_match, obj_match


def evaluate(
    generated: list[SceneLayout],
    reference: list[SceneLayout] | None = None,
    sources: list[SceneHierarchy] | None = None,
    pairs=DEFAULT_PAIRS,
) -> MetricReport:
    """Bundle all metrics into one report."""
    report = MetricReport(scene_count=len(generated))
    report.oob_rate, report.overlap_rate = feasibility_metrics(generated)
    if reference is not None:
        report.kl_div, report.kl_per_pair = kl_relative_placement(generated, reference, pairs)
        report.kl_div_alt_bins = sum(
            v["kl_alt_bins"] for v in report.kl_per_pair.values()
        ) / len(report.kl_per_pair)
    if sources is not None:
        report.rel_match, report.obj_match = semantic_alignment(list(zip(sources, generated)))
    return report


def format_report(report: MetricReport) -> str:
    lines = [
        "metric            value",
        "-----------------------",
        f"scenes            {report.scene_count}",
        f"oob_rate          {report.oob_rate:.2f}",
        f"overlap_rate      {report.overlap_rate:.2f}",
    ]
    if report.kl_per_pair:
        lines.append(f"kl_div            {report.kl_div:.4f}")
        lines.append(f"kl_div_{HIST_BINS_ALT}bins     {report.kl_div_alt_bins:.4f}")
        for name, info in sorted(report.kl_per_pair.items()):
            lines.append(f"  {name:<15} {info['kl']:.4f} (n={info['n_ref']}/{info['n_gen']})")
    lines.append(f"rel_match         {report.rel_match:.2f}")
    lines.append(f"obj_match         {report.obj_match:.2f}")
    return "\n".join(lines)


def serialize_report(report: MetricReport) -> str:
    out = ["format: hilayout-metrics/1"]
    out.append(f"scenes: {report.scene_count}")
    out.append(f"oob_rate: {report.oob_rate!r}")
    out.append(f"overlap_rate: {report.overlap_rate!r}")
    out.append(f"kl_div: {report.kl_div!r}")
    out.append(f"kl_div_alt_bins: {report.kl_div_alt_bins!r}")
    for name, info in sorted(report.kl_per_pair.items()):
        out.append(f"kl_pair {name}: {info['kl']!r} {info['kl_alt_bins']!r} {info['n_ref']} {info['n_gen']}")
    out.append(f"rel_match: {report.rel_match!r}")
    out.append(f"obj_match: {report.obj_match!r}")
    return "\n".join(out) + "\n"
