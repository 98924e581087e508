import math

import numpy as np
import pytest

from hilayout.scene_model import (
    AreaPose,
    FunctionalArea,
    InvalidHierarchy,
    MissingPose,
    Pose2D,
    RelationEdge,
    SceneHierarchy,
    SceneObject,
    SceneRoot,
    apply_rel,
    rel,
    rotate,
    to_scene_frame,
    validate_hierarchy,
    validated,
)


def make_pose(rng) -> Pose2D:
    return Pose2D(
        center=(float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10))),
        theta=int(rng.choice([0, 90, 180, 270])),
    )


def test_rel_identity_pose():
    p = Pose2D((1.5, -2.0), 90)
    assert rel(p, p) == ((0.0, 0.0), 0)


def test_rel_world_frame_anchor():
    anchor = Pose2D((0.0, 0.0), 0)
    obj = Pose2D((1.0, 0.0), 90)
    assert rel(obj, anchor) == ((1.0, 0.0), 90)


def test_rel_rotated_anchor():
    # Hand rotation of (0,1) by -90 gives (1,0); round trip confirms.
    anchor = Pose2D((2.0, 2.0), 90)
    obj = Pose2D((2.0, 3.0), 90)
    out = rel(obj, anchor)
    assert out == ((1.0, 0.0), 0)
    assert apply_rel(anchor, out) == obj


def test_apply_rel_examples():
    assert apply_rel(Pose2D((0.0, 0.0), 0), ((1.0, 2.0), 90)) == Pose2D((1.0, 2.0), 90)
    assert apply_rel(Pose2D((2.0, 2.0), 90), ((1.0, 0.0), 0)) == Pose2D((2.0, 3.0), 90)
    assert apply_rel(Pose2D((1.0, 1.0), 180), ((0.0, 0.0), 0)) == Pose2D((1.0, 1.0), 180)


def test_rel_apply_rel_round_trip_10k():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(10_000):
        anchor = make_pose(rng)
        obj = make_pose(rng)
        back = apply_rel(anchor, rel(obj, anchor))
        worst = max(worst, abs(back.center[0] - obj.center[0]), abs(back.center[1] - obj.center[1]))
        assert back.theta == obj.theta
    assert worst <= 1e-9


def test_rel_equivariant_under_rigid_motion():
    rng = np.random.default_rng(7)
    for _ in range(500):
        anchor, obj, motion = make_pose(rng), make_pose(rng), make_pose(rng)
        moved_anchor = apply_rel(motion, (anchor.center, anchor.theta))
        moved_obj = apply_rel(motion, (obj.center, obj.theta))
        base_pos, base_theta = rel(obj, anchor)
        moved_pos, moved_theta = rel(moved_obj, moved_anchor)
        assert moved_theta == base_theta
        assert math.isclose(moved_pos[0], base_pos[0], abs_tol=1e-9)
        assert math.isclose(moved_pos[1], base_pos[1], abs_tol=1e-9)


def test_rotate_quarter_turns():
    assert rotate(90, (1.0, 0.0)) == (0.0, 1.0)
    assert rotate(270, (0.0, 1.0)) == (1.0, 0.0)
    assert rotate(180, (1.0, 2.0)) == (-1.0, -2.0)


def _hierarchy(areas, objects, relations=()):
    return SceneHierarchy(
        root=SceneRoot(text="a test room", size=(6.0, 6.0)),
        areas=tuple(areas),
        objects={o.id: o for o in objects},
        relations=tuple(relations),
    )


def _obj(oid, size=(1.0, 1.0, 1.0), pose=None):
    return SceneObject(id=oid, text=oid.replace("_", " "), category=oid.split("_")[0], size=size, pose=pose)


def test_to_scene_frame_single_area_center():
    area = FunctionalArea(
        id="a", text="area", size=(4.0, 4.0), anchor_object="bed_1",
        members=("bed_1",), pose=AreaPose((0.0, 0.0), "+y"),
    )
    h = _hierarchy([area], [_obj("bed_1", pose=Pose2D((0.0, 0.0), 0))])
    layout = to_scene_frame(h)
    assert layout.object_poses["bed_1"] == Pose2D((0.0, 0.0), 0)
    assert layout.provenance["bed_1"] == "anchor:a"


def test_to_scene_frame_facing_negative_y():
    # Compose rotations by hand: facing -y is a 180 turn of the local frame.
    area = FunctionalArea(
        id="a", text="area", size=(4.0, 4.0), anchor_object="bed_1",
        members=("bed_1", "lamp_1"), pose=AreaPose((1.0, 2.0), "-y"),
    )
    h = _hierarchy(
        [area],
        [_obj("bed_1", pose=Pose2D((0.0, 0.0), 0)), _obj("lamp_1", pose=Pose2D((1.0, 0.0), 0))],
    )
    layout = to_scene_frame(h)
    lamp = layout.object_poses["lamp_1"]
    assert lamp.center == (0.0, 2.0)
    assert lamp.theta == 180
    # Cross-check via the rel round trip: local pose recovers under rel with
    # the area pose expressed as a Pose2D.
    area_as_pose = Pose2D((1.0, 2.0), 180)
    pos, theta = rel(lamp, area_as_pose)
    assert math.isclose(pos[0], 1.0, abs_tol=1e-12) and math.isclose(pos[1], 0.0, abs_tol=1e-12)
    assert theta == 0


def test_to_scene_frame_containment_two_areas():
    rng = np.random.default_rng(3)
    a1 = FunctionalArea(
        id="a1", text="x", size=(2.0, 2.0), anchor_object="bed_1",
        members=("bed_1",), pose=AreaPose((-1.5, 0.0), "+y"),
    )
    a2 = FunctionalArea(
        id="a2", text="y", size=(2.0, 2.0), anchor_object="desk_1",
        members=("desk_1",), pose=AreaPose((1.5, 0.0), "-x"),
    )
    for _ in range(50):
        local = (float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)))
        h = _hierarchy(
            [a1, a2],
            [
                _obj("bed_1", size=(0.8, 0.8, 0.5), pose=Pose2D(local, 0)),
                _obj("desk_1", size=(0.8, 0.8, 0.5), pose=Pose2D(local, 90)),
            ],
        )
        layout = to_scene_frame(h)
        for oid, area in (("bed_1", a1), ("desk_1", a2)):
            pose = layout.object_poses[oid]
            assert abs(pose.center[0] - area.pose.center[0]) <= 1.0 - 0.4 + 1e-9
            assert abs(pose.center[1] - area.pose.center[1]) <= 1.0 - 0.4 + 1e-9


def test_to_scene_frame_missing_pose():
    area = FunctionalArea(id="a", text="area", size=(4.0, 4.0), anchor_object="bed_1", members=("bed_1",))
    h = _hierarchy([area], [_obj("bed_1")])
    with pytest.raises(MissingPose):
        to_scene_frame(h)


def test_validation_rejects_object_in_two_areas():
    a1 = FunctionalArea(id="a1", text="x", size=(2.0, 2.0), anchor_object="bed_1", members=("bed_1",))
    a2 = FunctionalArea(id="a2", text="y", size=(2.0, 2.0), anchor_object="bed_1", members=("bed_1",))
    issues = validate_hierarchy(_hierarchy([a1, a2], [_obj("bed_1")]))
    assert any(code == "object-in-two-areas" for code, _, _ in issues)


def test_validation_rejects_cross_area_relation():
    a1 = FunctionalArea(id="a1", text="x", size=(2.0, 2.0), anchor_object="bed_1", members=("bed_1",))
    a2 = FunctionalArea(id="a2", text="y", size=(2.0, 2.0), anchor_object="desk_1", members=("desk_1",))
    h = _hierarchy([a1, a2], [_obj("bed_1"), _obj("desk_1")], [RelationEdge("bed_1", "desk_1", "next to")])
    assert any(code == "cross-area-relation" for code, _, _ in validate_hierarchy(h))


def test_validation_rejects_relation_off_anchor():
    a = FunctionalArea(
        id="a1", text="x", size=(3.0, 3.0), anchor_object="bed_1",
        members=("bed_1", "lamp_1", "desk_1"),
    )
    h = _hierarchy(
        [a],
        [_obj("bed_1"), _obj("lamp_1"), _obj("desk_1")],
        [RelationEdge("lamp_1", "desk_1", "next to")],
    )
    assert any(code == "relation-off-anchor" for code, _, _ in validate_hierarchy(h))


def test_validation_rejects_dangling_ids():
    a = FunctionalArea(id="a1", text="x", size=(2.0, 2.0), anchor_object="bed_1", members=("bed_1", "ghost_1"))
    h = _hierarchy([a], [_obj("bed_1")])
    codes = {code for code, _, _ in validate_hierarchy(h)}
    assert "dangling-id" in codes


def test_validated_raises_and_passes():
    a = FunctionalArea(id="a1", text="x", size=(2.0, 2.0), anchor_object="bed_1", members=("bed_1",))
    good = _hierarchy([a], [_obj("bed_1")])
    assert validated(good) is good
    bad = _hierarchy([a], [])
    with pytest.raises(InvalidHierarchy):
        validated(bad)
