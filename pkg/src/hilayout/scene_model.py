"""Hierarchical scene representation and the relative-placement algebra.

A scene is a three-level tree: the root (rectangular floor), functional
areas (internal nodes, each with one anchor object), and objects (leaves).
Relation edges attach satellite objects to their area's anchor and carry a
textual phrase plus fine-grained relative placement.

All orientations are discrete multiples of 90 degrees, measured CCW with
0 = facing +y of the enclosing frame.  Units are meters; the scene frame
origin sits at the floor center with +y pointing "north".
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import relations

THETAS = (0, 90, 180, 270)
FACINGS = ("+x", "-x", "+y", "-y")

# CCW rotation of the frame, as the angle that maps local +y onto the facing.
FACING_ANGLE = {"+y": 0, "-x": 90, "-y": 180, "+x": 270}
ANGLE_FACING = {v: k for k, v in FACING_ANGLE.items()}

MAX_ROOM_EXTENT = 30.0

# Integer rotation matrices ((a, b), (c, d)): (x, y) -> (ax + by, cx + dy).
_ROT = {
    0: (1, 0, 0, 1),
    90: (0, -1, 1, 0),
    180: (-1, 0, 0, -1),
    270: (0, 1, -1, 0),
}


class MissingPose(Exception):
    """A pose required for frame composition is absent."""


class InvalidHierarchy(Exception):
    """The hierarchy violates a structural invariant."""

    def __init__(self, issues: list[tuple[str, str, str]]):
        self.issues = issues
        super().__init__("; ".join(f"{code} at {path}: {msg}" for code, path, msg in issues))


def rotate(theta: int, point: tuple[float, float]) -> tuple[float, float]:
    """Rotate a 2D point CCW by a multiple of 90 degrees."""
    a, b, c, d = _ROT[theta % 360]
    x, y = point
    return (a * x + b * y, c * x + d * y)


@dataclass(frozen=True)
class Pose2D:
    """Center position plus discrete orientation in the enclosing frame."""

    center: tuple[float, float]
    theta: int = 0

    def __post_init__(self):
        if self.theta not in THETAS:
            raise ValueError(f"theta must be one of {THETAS}, got {self.theta}")


@dataclass(frozen=True)
class AreaPose:
    """Area center plus cardinal facing in the scene frame."""

    center: tuple[float, float]
    facing: str = "+y"

    def __post_init__(self):
        if self.facing not in FACINGS:
            raise ValueError(f"facing must be one of {FACINGS}, got {self.facing}")

    @property
    def angle(self) -> int:
        return FACING_ANGLE[self.facing]


@dataclass(frozen=True)
class SceneRoot:
    text: str
    size: tuple[float, float]


@dataclass(frozen=True)
class SceneObject:
    id: str
    text: str
    category: str
    size: tuple[float, float, float]
    asset: str | None = None
    pose: Pose2D | None = None

    @property
    def footprint(self) -> tuple[float, float]:
        return (self.size[0], self.size[1])


@dataclass(frozen=True)
class FunctionalArea:
    id: str
    text: str
    size: tuple[float, float]
    anchor_object: str
    members: tuple[str, ...]
    pose: AreaPose | None = None


@dataclass(frozen=True)
class RelationEdge:
    """Satellite -> anchor edge with optional phrase and relative placement."""

    from_id: str
    to_id: str
    text: str | None = None
    rel_position: tuple[float, float] | None = None
    rel_theta: int | None = None
    aligned: bool | None = None


@dataclass(frozen=True)
class SceneHierarchy:
    root: SceneRoot
    areas: tuple[FunctionalArea, ...]
    objects: dict[str, SceneObject]
    relations: tuple[RelationEdge, ...] = ()

    def area_of(self, obj_id: str) -> FunctionalArea | None:
        for area in self.areas:
            if obj_id in area.members:
                return area
        return None

    def with_object_pose(self, obj_id: str, pose: Pose2D) -> "SceneHierarchy":
        objects = dict(self.objects)
        objects[obj_id] = replace(objects[obj_id], pose=pose)
        return replace(self, objects=objects)

    def with_area_pose(self, area_id: str, pose: AreaPose) -> "SceneHierarchy":
        areas = tuple(replace(a, pose=pose) if a.id == area_id else a for a in self.areas)
        return replace(self, areas=areas)


@dataclass(frozen=True)
class SceneLayout:
    """Solved scene: absolute poses in the scene frame plus provenance."""

    hierarchy: SceneHierarchy
    area_poses: dict[str, AreaPose]
    object_poses: dict[str, Pose2D]
    provenance: dict[str, str] = field(default_factory=dict)
    report: object | None = None


def rel(obj_pose: Pose2D, anchor_pose: Pose2D) -> tuple[tuple[float, float], int]:
    """Relative placement of ``obj_pose`` expressed in the anchor's frame.

    Exact inverse of :func:`apply_rel`.
    """
    dx = obj_pose.center[0] - anchor_pose.center[0]
    dy = obj_pose.center[1] - anchor_pose.center[1]
    position = rotate(-anchor_pose.theta % 360, (dx, dy))
    theta = (obj_pose.theta - anchor_pose.theta) % 360
    return position, theta


def apply_rel(anchor_pose: Pose2D, relative: tuple[tuple[float, float], int]) -> Pose2D:
    """Compose an anchor pose with a relative placement."""
    position, theta = relative
    off = rotate(anchor_pose.theta, position)
    return Pose2D(
        center=(anchor_pose.center[0] + off[0], anchor_pose.center[1] + off[1]),
        theta=(anchor_pose.theta + theta) % 360,
    )


def compose_area(area_pose: AreaPose, local: Pose2D) -> Pose2D:
    """Map an area-local pose into the scene frame."""
    angle = area_pose.angle
    off = rotate(angle, local.center)
    return Pose2D(
        center=(area_pose.center[0] + off[0], area_pose.center[1] + off[1]),
        theta=(local.theta + angle) % 360,
    )


def to_scene_frame(hierarchy: SceneHierarchy) -> SceneLayout:
    """Compose solved area poses with area-local object poses.

    Raises :class:`MissingPose` when any area or object pose is absent.
    """
    area_poses: dict[str, AreaPose] = {}
    object_poses: dict[str, Pose2D] = {}
    provenance: dict[str, str] = {}
    relation_by_from = {e.from_id: e for e in hierarchy.relations}

    for area in hierarchy.areas:
        if area.pose is None:
            raise MissingPose(f"area {area.id} has no pose")
        area_poses[area.id] = area.pose
        for obj_id in area.members:
            obj = hierarchy.objects[obj_id]
            if obj.pose is None:
                raise MissingPose(f"object {obj_id} has no pose")
            object_poses[obj_id] = compose_area(area.pose, obj.pose)
            if obj_id == area.anchor_object:
                provenance[obj_id] = f"anchor:{area.id}"
            elif obj_id in relation_by_from and relation_by_from[obj_id].text:
                edge = relation_by_from[obj_id]
                provenance[obj_id] = f"relation:{edge.from_id}->{edge.to_id}:{edge.text}"
            else:
                provenance[obj_id] = f"member:{area.id}"

    return SceneLayout(
        hierarchy=hierarchy,
        area_poses=area_poses,
        object_poses=object_poses,
        provenance=provenance,
    )


def validate_hierarchy(h: SceneHierarchy) -> list[tuple[str, str, str]]:
    """Collect structural violations as (code, path, message) triples."""
    issues: list[tuple[str, str, str]] = []

    if not h.root.text.strip():
        issues.append(("empty-text", "scene.text", "scene description must be non-empty"))
    for i, v in enumerate(h.root.size):
        if not (0.0 < v <= MAX_ROOM_EXTENT):
            issues.append(("bad-size", "scene.size", f"component {i} = {v} outside (0, {MAX_ROOM_EXTENT}]"))

    seen_parent: dict[str, str] = {}
    for area in h.areas:
        path = f"area.{area.id}"
        if any(v <= 0 for v in area.size):
            issues.append(("bad-size", f"{path}.size", f"non-positive extent {area.size}"))
        if not area.members:
            issues.append(("empty-area", path, "area has no member objects"))
        if area.anchor_object not in area.members:
            issues.append(("anchor-not-member", path, f"anchor {area.anchor_object} not in members"))
        for obj_id in area.members:
            if obj_id in seen_parent:
                issues.append(
                    ("object-in-two-areas", f"object.{obj_id}", f"member of both {seen_parent[obj_id]} and {area.id}")
                )
            else:
                seen_parent[obj_id] = area.id
            if obj_id not in h.objects:
                issues.append(("dangling-id", f"{path}.members", f"object {obj_id} not defined"))

    for obj_id, obj in h.objects.items():
        path = f"object.{obj_id}"
        if obj.id != obj_id:
            issues.append(("id-mismatch", path, f"keyed {obj_id} but id is {obj.id}"))
        if any(v <= 0 for v in obj.size):
            issues.append(("bad-size", f"{path}.size", f"non-positive extent {obj.size}"))
        if obj_id not in seen_parent:
            issues.append(("orphan-object", path, "object belongs to no area"))

    for edge in h.relations:
        path = f"relation.{edge.from_id}->{edge.to_id}"
        if edge.from_id == edge.to_id:
            issues.append(("self-relation", path, "relation endpoints are identical"))
            continue
        a_from = seen_parent.get(edge.from_id)
        a_to = seen_parent.get(edge.to_id)
        if a_from is None or a_to is None:
            issues.append(("dangling-id", path, "relation endpoint not in any area"))
            continue
        if a_from != a_to:
            issues.append(("cross-area-relation", path, f"spans areas {a_from} and {a_to}"))
        if edge.text is not None:
            area = next(a for a in h.areas if a.id == a_to)
            if edge.to_id != area.anchor_object:
                issues.append(("relation-off-anchor", path, f"textual relation must target anchor {area.anchor_object}"))
            if relations.normalize_phrase(edge.text) is None:
                issues.append(("unknown-relation", path, f"phrase {edge.text!r} not in vocabulary"))
        if edge.rel_theta is not None and edge.rel_theta not in THETAS:
            issues.append(("bad-theta", path, f"rel_theta {edge.rel_theta} not in {THETAS}"))

    return issues


def validated(h: SceneHierarchy) -> SceneHierarchy:
    """Return ``h`` unchanged or raise :class:`InvalidHierarchy`."""
    issues = validate_hierarchy(h)
    if issues:
        raise InvalidHierarchy(issues)
    return h
