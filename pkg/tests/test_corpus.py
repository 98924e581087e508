import json

import numpy as np
import pytest

from hilayout import relations
from hilayout.corpus import (
    FormatError,
    IoError,
    generate,
    ingest_3dfront,
    reference_layout,
    strip_ground_truth,
)
from hilayout.geometry import EPS_OVERLAP, Obb2D, overlap_area
from hilayout.scene_model import Pose2D, rel, validate_hierarchy


def test_generate_deterministic():
    a = generate(3, seed=7)
    b = generate(3, seed=7)
    assert a == b
    c = generate(3, seed=8)
    assert c != a


def test_generate_rejects_nonpositive():
    with pytest.raises(ValueError):
        generate(0, seed=1)


def _area_local_boxes(h, area):
    for oid in area.members:
        obj = h.objects[oid]
        hx, hy = obj.size[0] / 2, obj.size[1] / 2
        if obj.pose.theta % 180 == 90:
            hx, hy = hy, hx
        yield oid, Obb2D(obj.pose.center, (hx, hy), 0)


def test_generated_scenes_valid_and_feasible():
    scenes = generate(1000, seed=123)
    for h in scenes:
        assert validate_hierarchy(h) == []
        for area in h.areas:
            boxes = dict(_area_local_boxes(h, area))
            ids = sorted(boxes)
            # Zero overlap between members.
            for i, a in enumerate(ids):
                for b in ids[i + 1 :]:
                    assert overlap_area(boxes[a], boxes[b]) <= EPS_OVERLAP, (h.root.text, a, b)
            # Everything inside the area box.
            for oid, box in boxes.items():
                bx, by = box.half_extents
                assert abs(box.center[0]) + bx <= area.size[0] / 2 + 1e-9
                assert abs(box.center[1]) + by <= area.size[1] / 2 + 1e-9
        # Budget honored.
        total = sum(a.size[0] * a.size[1] for a in h.areas)
        assert total <= 0.85 * h.root.size[0] * h.root.size[1] + 1e-9


def test_relations_only_to_anchor_and_alignment_consistent():
    for h in generate(300, seed=5):
        anchor_by_area = {a.id: a.anchor_object for a in h.areas}
        for e in h.relations:
            area = h.area_of(e.from_id)
            assert e.to_id == anchor_by_area[area.id]
            assert e.aligned == relations.is_aligned(e.rel_position, e.rel_theta)
            # Ground truth matches poses through REL.
            obj = h.objects[e.from_id]
            anchor = h.objects[e.to_id]
            pos, theta = rel(obj.pose, anchor.pose)
            assert pos == pytest.approx(e.rel_position, abs=1e-9)
            assert theta == e.rel_theta


def test_bed_nightstand_distribution_matches_template():
    scenes = generate(1000, seed=31)
    xs, ys = [], []
    for h in scenes:
        for e in h.relations:
            if h.objects[e.from_id].category == "nightstand" and e.text == "right of":
                xs.append(e.rel_position[0])
                ys.append(e.rel_position[1])
    n = len(xs)
    assert n > 200
    # Declared distribution: x = bed_hw + ns_hw + gap, all uniform draws.
    mean_x = 0.8 + 0.2375 + 0.08 + 0.025
    sd_x = np.sqrt(0.2**2 / 12 + 0.075**2 / 24**2 + 0.05**2 / 12 + 0.04**2) + 0.02
    assert abs(np.mean(xs) - mean_x) < 3 * sd_x / np.sqrt(n) + 0.01
    assert abs(np.mean(ys) - (-0.35)) < 3 * 0.05 / np.sqrt(n) + 0.01


def test_strip_ground_truth():
    h = generate(1, seed=2)[0]
    bare = strip_ground_truth(h)
    assert all(o.pose is None for o in bare.objects.values())
    assert all(e.rel_position is None and e.rel_theta is None for e in bare.relations)
    assert all(e.text is not None for e in bare.relations)
    assert validate_hierarchy(bare) == []


def test_reference_layout_preserves_relative_placements():
    h = generate(2, seed=9)[0]
    layout = reference_layout(h)
    for e in h.relations:
        pos, theta = rel(layout.object_poses[e.from_id], layout.object_poses[e.to_id])
        assert pos == pytest.approx(e.rel_position, abs=1e-9)
        assert theta == e.rel_theta


def _mini_scene(uid, floor, furniture):
    return {"uid": uid, "room_type": "bedroom", "floor": floor, "furniture": furniture}


def _write_fixture(tmp_path, scenes):
    for i, scene in enumerate(scenes):
        (tmp_path / f"scene_{i}.json").write_text(json.dumps(scene))


def test_ingest_empty_dir(tmp_path):
    out, report = ingest_3dfront(tmp_path)
    assert out == []
    assert report.accepted == 0


def test_ingest_missing_dir(tmp_path):
    with pytest.raises(IoError):
        ingest_3dfront(tmp_path / "nope")


def test_ingest_mini_fixture(tmp_path):
    rect = [[0, 0], [4, 0], [4, 5], [0, 5]]
    lshape = [[0, 0], [4, 0], [4, 2], [2, 2], [2, 5], [0, 5]]
    furniture = [
        {"category": "bed", "text": "double bed", "size": [1.6, 2.0, 0.5], "position": [2.0, 1.5], "theta": 0},
        {"category": "nightstand", "size": [0.4, 0.4, 0.5], "position": [0.9, 1.0], "theta": 0},
        {"category": "lamp", "size": [0.3, 0.3, 1.5], "position": [0.2, 4.8], "theta": 0},
    ]
    _write_fixture(
        tmp_path,
        [
            _mini_scene("s0", rect, furniture),
            _mini_scene("s1", rect, furniture[:2]),
            _mini_scene("s2", lshape, furniture),
        ],
    )
    out, report = ingest_3dfront(tmp_path)
    assert report.accepted == 2
    assert report.rejected_irregular == 1
    assert len(out) == 2
    # The far-away lamp has no anchor within 2.5 m of it.
    assert any("lamp" in d for d in report.dropped_objects)
    for h in out:
        assert validate_hierarchy(h) == []
        for e in h.relations:
            assert e.rel_position is not None


def test_ingest_bad_json(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(FormatError):
        ingest_3dfront(tmp_path)
