"""Parse, validate, repair, and serialize scene-hierarchy documents.

The canonical format is an indented key-value text document with a
versioned header (``format: hilayout/1``), stored as ``.hi`` (hierarchy)
or ``.hilayout`` (hierarchy plus solved layout).  A JSON mirror of the
same structure is accepted on input.  Lexical repairs (code fences,
comment lines, trailing commas, preamble prose) are applied before
parsing and logged.

Grammar sketch (2-space indents)::

    document   := "format: hilayout/1" section*
    section    := scene | area | relation | layout
    scene      := "scene:" INDENT pair*
    area       := "area" ID ":" INDENT pair* object*
    object     := "object" ID ":" INDENT pair* [pose]
    relation   := "relation:" INDENT pair*
    layout     := "layout:" INDENT (area-pose | object-pose | report)*
    pair       := KEY ": " VALUE
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from . import relations
from .scene_model import (
    AreaPose,
    FunctionalArea,
    Pose2D,
    RelationEdge,
    SceneHierarchy,
    SceneLayout,
    SceneObject,
    SceneRoot,
    THETAS,
    validate_hierarchy,
)

FORMAT_HEADER = "hilayout/1"
BUDGET_FACTOR = 0.85

_STRUCTURE_CODES = {
    "object-in-two-areas",
    "cross-area-relation",
    "relation-off-anchor",
    "dangling-id",
    "orphan-object",
    "self-relation",
    "empty-area",
    "anchor-not-member",
    "id-mismatch",
}


@dataclass(frozen=True)
class RawDocument:
    text: str


@dataclass
class ValidationReport:
    errors: list[tuple[str, str, str]] = field(default_factory=list)
    repairs: list[str] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    seed: int | None = None


class HierarchyIoError(Exception):
    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report or ValidationReport()


class ParseError(HierarchyIoError):
    """Unrecoverable document syntax."""


class SchemaError(HierarchyIoError):
    """A required field is missing or has an invalid value."""


class StructureError(HierarchyIoError):
    """The document violates a hierarchy tree invariant."""


class Unrepairable(HierarchyIoError):
    """Feasibility repair cannot make the hierarchy fit the room."""


# ---------------------------------------------------------------------------
# Lexical repairs
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"^\s*```[a-zA-Z0-9_-]*\s*$")


def _lexical_repairs(text: str, report: ValidationReport) -> str:
    if "\r" in text:
        text = text.replace("\r\n", "\n").replace("\r", "\n")
        report.repairs.append("normalized line endings")

    lines = text.split("\n")
    if any(_FENCE_RE.match(ln) for ln in lines):
        lines = [ln for ln in lines if not _FENCE_RE.match(ln)]
        report.repairs.append("stripped markdown code fences")

    kept: list[str] = []
    dropped_comments = 0
    for ln in lines:
        if ln.lstrip().startswith("#"):
            dropped_comments += 1
        else:
            kept.append(ln)
    if dropped_comments:
        report.repairs.append(f"removed {dropped_comments} comment line(s)")
    lines = kept

    if any("\t" in ln for ln in lines):
        lines = [ln.replace("\t", "  ") for ln in lines]
        report.repairs.append("expanded tabs to spaces")

    # Drop prose before the header / opening brace (LLM preambles).
    start = 0
    for i, ln in enumerate(lines):
        s = ln.strip()
        if s.startswith("format:") or s.startswith("{"):
            start = i
            break
    else:
        return "\n".join(lines)
    if start > 0 and any(lines[i].strip() for i in range(start)):
        report.repairs.append("dropped preamble before document start")
    return "\n".join(lines[start:])


def _strip_trailing_commas(text: str, report: ValidationReport) -> str:
    fixed = re.sub(r",(\s*[}\]])", r"\1", text)
    if fixed != text:
        report.repairs.append("removed trailing commas")
    return fixed


# ---------------------------------------------------------------------------
# Text-format block reader
# ---------------------------------------------------------------------------

_BLOCK_KINDS = {"scene", "area", "object", "relation", "layout", "pose", "report"}


@dataclass
class _Node:
    kind: str
    name: str | None
    pairs: list[tuple[str, str, int]] = field(default_factory=list)
    children: list["_Node"] = field(default_factory=list)

    def get(self, key: str) -> str | None:
        for k, v, _ in self.pairs:
            if k == key:
                return v
        return None

    def child(self, kind: str) -> "_Node | None":
        for c in self.children:
            if c.kind == kind:
                return c
        return None


def _read_blocks(text: str) -> tuple[list[_Node], list[tuple[str, str, int]]]:
    root = _Node(kind="_root", name=None)
    stack: list[tuple[int, _Node]] = [(-1, root)]
    for lineno, raw in enumerate(text.split("\n"), 1):
        if not raw.strip():
            continue
        indent_spaces = len(raw) - len(raw.lstrip(" "))
        if indent_spaces % 2 != 0:
            raise ParseError(f"line {lineno}: odd indentation of {indent_spaces} spaces")
        level = indent_spaces // 2
        line = raw.strip()
        while stack and stack[-1][0] >= level:
            stack.pop()
        if not stack:
            raise ParseError(f"line {lineno}: indentation has no parent block")
        parent = stack[-1][1]

        head, sep, rest = line.partition(":")
        if not sep:
            raise ParseError(f"line {lineno}: expected 'key: value' or block header")
        rest = rest.strip()
        words = head.split()
        if rest == "" and words and words[0] in _BLOCK_KINDS:
            if len(words) > 2:
                raise ParseError(f"line {lineno}: malformed block header {line!r}")
            node = _Node(kind=words[0], name=words[1] if len(words) == 2 else None)
            parent.children.append(node)
            stack.append((level, node))
        else:
            parent.pairs.append((head.strip(), rest, lineno))
    return root.children, root.pairs


# ---------------------------------------------------------------------------
# Value parsing helpers
# ---------------------------------------------------------------------------


def _floats(value: str, n: int, path: str, report: ValidationReport) -> tuple[float, ...]:
    parts = [p for p in value.replace("x", " ").replace("X", " ").split() if p]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        vals = ()
    if len(vals) != n:
        report.errors.append(("bad-value", path, f"expected {n} numbers, got {value!r}"))
        raise SchemaError(f"{path}: expected {n} numbers, got {value!r}", report)
    return vals


def _require(node: _Node, key: str, path: str, report: ValidationReport) -> str:
    value = node.get(key)
    if value is None or value == "":
        report.errors.append(("missing-field", f"{path}.{key}", f"required field {key} absent"))
        raise SchemaError(f"{path}.{key}: required field absent", report)
    return value


def _parse_bool(value: str, path: str, report: ValidationReport) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    report.errors.append(("bad-value", path, f"expected boolean, got {value!r}"))
    raise SchemaError(f"{path}: expected boolean, got {value!r}", report)


def _parse_theta(value: str, path: str, report: ValidationReport) -> int:
    try:
        theta = int(float(value))
    except ValueError:
        theta = -1
    if theta not in THETAS:
        report.errors.append(("bad-theta", path, f"theta {value!r} not in {THETAS}"))
        raise SchemaError(f"{path}: theta {value!r} not in {THETAS}", report)
    return theta


# ---------------------------------------------------------------------------
# JSON mirror -> block nodes
# ---------------------------------------------------------------------------


def _json_to_nodes(data: dict, report: ValidationReport) -> tuple[list[_Node], list[tuple[str, str, int]]]:
    def pair_str(value) -> str:
        if isinstance(value, (list, tuple)):
            return " ".join(repr(float(v)) for v in value)
        if isinstance(value, bool):
            return "true" if value else "false"
        return str(value)

    def pose_node(pose: dict, object_style: bool) -> _Node:
        node = _Node(kind="pose", name=None)
        node.pairs.append(("center", pair_str(pose.get("center", "")), 0))
        if object_style:
            node.pairs.append(("theta", pair_str(pose.get("theta", "")), 0))
        else:
            node.pairs.append(("facing", str(pose.get("facing", "")), 0))
        return node

    nodes: list[_Node] = []
    pairs: list[tuple[str, str, int]] = [("format", str(data.get("format", "")), 0)]

    scene = data.get("scene")
    if isinstance(scene, dict):
        n = _Node(kind="scene", name=None)
        for key in ("text", "size"):
            if key in scene:
                n.pairs.append((key, pair_str(scene[key]), 0))
        nodes.append(n)

    for area in data.get("areas", []) or []:
        n = _Node(kind="area", name=str(area.get("id", "")))
        for key in ("text", "size", "anchor"):
            if key in area:
                n.pairs.append((key, pair_str(area[key]), 0))
        if isinstance(area.get("pose"), dict):
            n.children.append(pose_node(area["pose"], object_style=False))
        for obj in area.get("objects", []) or []:
            on = _Node(kind="object", name=str(obj.get("id", "")))
            for key in ("text", "category", "size", "asset"):
                if key in obj:
                    on.pairs.append((key, pair_str(obj[key]), 0))
            if isinstance(obj.get("pose"), dict):
                on.children.append(pose_node(obj["pose"], object_style=True))
            n.children.append(on)
        nodes.append(n)

    for edge in data.get("relations", []) or []:
        n = _Node(kind="relation", name=None)
        for key_json, key in (("from", "from"), ("to", "to"), ("text", "text"),
                              ("position", "position"), ("theta", "theta"), ("aligned", "aligned")):
            if key_json in edge and edge[key_json] is not None:
                n.pairs.append((key, pair_str(edge[key_json]), 0))
        nodes.append(n)

    layout = data.get("layout")
    if isinstance(layout, dict):
        ln = _Node(kind="layout", name=None)
        for area_id, pose in (layout.get("areas") or {}).items():
            an = _Node(kind="area", name=str(area_id))
            an.pairs.append(("center", pair_str(pose.get("center", "")), 0))
            an.pairs.append(("facing", str(pose.get("facing", "")), 0))
            ln.children.append(an)
        for obj_id, entry in (layout.get("objects") or {}).items():
            on = _Node(kind="object", name=str(obj_id))
            on.pairs.append(("center", pair_str(entry.get("center", "")), 0))
            on.pairs.append(("theta", pair_str(entry.get("theta", "")), 0))
            if entry.get("source"):
                on.pairs.append(("source", str(entry["source"]), 0))
            ln.children.append(on)
        if isinstance(layout.get("report"), dict):
            rn = _Node(kind="report", name=None)
            for k, v in layout["report"].items():
                rn.pairs.append((str(k), pair_str(v), 0))
            ln.children.append(rn)
        nodes.append(ln)

    return nodes, pairs


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------


def _doc_text(doc) -> str:
    return doc.text if isinstance(doc, RawDocument) else str(doc)


def parse(doc) -> tuple[SceneHierarchy, ValidationReport]:
    """Parse a document into a validated SceneHierarchy.

    Raises ParseError / SchemaError / StructureError; on success the
    returned report has no errors but may list applied lexical repairs.
    """
    hierarchy, report, _ = _parse_full(doc)
    return hierarchy, report


def parse_layout(doc) -> tuple[SceneLayout, ValidationReport]:
    """Parse a ``.hilayout`` document (hierarchy plus layout section)."""
    hierarchy, report, layout_node = _parse_full(doc)
    if layout_node is None:
        report.errors.append(("missing-field", "layout", "document has no layout section"))
        raise SchemaError("document has no layout section", report)
    layout = _build_layout(hierarchy, layout_node, report)
    return layout, report


def _parse_full(doc):
    report = ValidationReport()
    text = _lexical_repairs(_doc_text(doc), report)
    stripped = text.lstrip()
    if not stripped:
        raise ParseError("empty document", report)

    if stripped.startswith("{"):
        cleaned = _strip_trailing_commas(text, report)
        try:
            data = json.loads(cleaned)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", report) from exc
        nodes, pairs = _json_to_nodes(data, report)
    else:
        nodes, pairs = _read_blocks(text)

    header = None
    for k, v, _ in pairs:
        if k == "format":
            header = v.strip()
            break
    if header != FORMAT_HEADER:
        raise ParseError(f"missing or unsupported format header: {header!r}", report)

    hierarchy = _build_hierarchy(nodes, report)

    issues = validate_hierarchy(hierarchy)
    if issues:
        report.errors.extend(issues)
        structural = [i for i in issues if i[0] in _STRUCTURE_CODES]
        detail = "; ".join(f"{c} at {p}: {m}" for c, p, m in issues[:4])
        if structural:
            raise StructureError(detail, report)
        raise SchemaError(detail, report)

    layout_node = next((n for n in nodes if n.kind == "layout"), None)
    return hierarchy, report, layout_node


def _build_hierarchy(nodes: list[_Node], report: ValidationReport) -> SceneHierarchy:
    scene = next((n for n in nodes if n.kind == "scene"), None)
    if scene is None:
        report.errors.append(("missing-field", "scene", "scene section absent"))
        raise SchemaError("scene section absent", report)
    root = SceneRoot(
        text=_require(scene, "text", "scene", report),
        size=_floats(_require(scene, "size", "scene", report), 2, "scene.size", report),
    )

    areas: list[FunctionalArea] = []
    objects: dict[str, SceneObject] = {}
    for node in nodes:
        if node.kind != "area":
            continue
        if not node.name:
            report.errors.append(("missing-field", "area.id", "area block without an id"))
            raise SchemaError("area block without an id", report)
        path = f"area.{node.name}"
        members = []
        for on in node.children:
            if on.kind != "object":
                continue
            if not on.name:
                report.errors.append(("missing-field", f"{path}.object.id", "object block without an id"))
                raise SchemaError("object block without an id", report)
            opath = f"object.{on.name}"
            pose = None
            pn = on.child("pose")
            if pn is not None:
                center = _floats(_require(pn, "center", f"{opath}.pose", report), 2, f"{opath}.pose.center", report)
                pose = Pose2D(center=center, theta=_parse_theta(_require(pn, "theta", f"{opath}.pose", report), f"{opath}.pose.theta", report))
            obj = SceneObject(
                id=on.name,
                text=_require(on, "text", opath, report),
                category=_require(on, "category", opath, report),
                size=_floats(_require(on, "size", opath, report), 3, f"{opath}.size", report),
                asset=on.get("asset"),
                pose=pose,
            )
            if on.name in objects:
                report.errors.append(("object-in-two-areas", opath, f"object {on.name} defined twice"))
                raise StructureError(f"object {on.name} defined in two areas", report)
            objects[on.name] = obj
            members.append(on.name)

        area_pose = None
        pn = node.child("pose")
        if pn is not None:
            center = _floats(_require(pn, "center", f"{path}.pose", report), 2, f"{path}.pose.center", report)
            facing = _require(pn, "facing", f"{path}.pose", report)
            if facing not in ("+x", "-x", "+y", "-y"):
                report.errors.append(("bad-value", f"{path}.pose.facing", f"bad facing {facing!r}"))
                raise SchemaError(f"bad facing {facing!r}", report)
            area_pose = AreaPose(center=center, facing=facing)

        areas.append(
            FunctionalArea(
                id=node.name,
                text=_require(node, "text", path, report),
                size=_floats(_require(node, "size", path, report), 2, f"{path}.size", report),
                anchor_object=_require(node, "anchor", path, report),
                members=tuple(members),
                pose=area_pose,
            )
        )

    edges: list[RelationEdge] = []
    for node in nodes:
        if node.kind != "relation":
            continue
        path = "relation"
        from_id = _require(node, "from", path, report)
        to_id = _require(node, "to", path, report)
        path = f"relation.{from_id}->{to_id}"
        text = node.get("text")
        if text is not None and text != "":
            canonical = relations.normalize_phrase(text)
            if canonical is None:
                report.errors.append(("unknown-relation", path, f"phrase {text!r} not in vocabulary"))
                raise SchemaError(f"{path}: phrase {text!r} not in vocabulary", report)
            if canonical != text:
                report.repairs.append(f"normalized relation phrase {text!r} -> {canonical!r}")
            text = canonical
        else:
            text = None
        position = node.get("position")
        theta = node.get("theta")
        aligned = node.get("aligned")
        edges.append(
            RelationEdge(
                from_id=from_id,
                to_id=to_id,
                text=text,
                rel_position=_floats(position, 2, f"{path}.position", report) if position else None,
                rel_theta=_parse_theta(theta, f"{path}.theta", report) if theta else None,
                aligned=_parse_bool(aligned, f"{path}.aligned", report) if aligned else None,
            )
        )

    return SceneHierarchy(root=root, areas=tuple(areas), objects=objects, relations=tuple(edges))


def _build_layout(hierarchy: SceneHierarchy, node: _Node, report: ValidationReport) -> SceneLayout:
    from .layout_solver import SolveReport

    area_poses: dict[str, AreaPose] = {}
    object_poses: dict[str, Pose2D] = {}
    provenance: dict[str, str] = {}
    solve_report = None
    for child in node.children:
        if child.kind == "area" and child.name:
            path = f"layout.area.{child.name}"
            center = _floats(_require(child, "center", path, report), 2, f"{path}.center", report)
            area_poses[child.name] = AreaPose(center=center, facing=_require(child, "facing", path, report))
        elif child.kind == "object" and child.name:
            path = f"layout.object.{child.name}"
            center = _floats(_require(child, "center", path, report), 2, f"{path}.center", report)
            object_poses[child.name] = Pose2D(
                center=center, theta=_parse_theta(_require(child, "theta", path, report), f"{path}.theta", report)
            )
            source = child.get("source")
            if source:
                provenance[child.name] = source
        elif child.kind == "report":
            def fnum(key, default=0.0):
                v = child.get(key)
                return float(v) if v is not None else default

            solve_report = SolveReport(
                feasible=(child.get("feasible") or "false").lower() == "true",
                objective=fnum("objective"),
                max_overlap=fnum("max_overlap"),
                max_oob=fnum("max_oob"),
                wall_assignment=dict(
                    part.split("=", 1) for part in (child.get("walls") or "").split() if "=" in part
                ),
            )

    missing = [oid for oid in hierarchy.objects if oid not in object_poses]
    if missing:
        report.errors.append(("missing-field", "layout", f"objects without poses: {missing}"))
        raise SchemaError(f"layout missing poses for {missing}", report)

    return SceneLayout(
        hierarchy=hierarchy,
        area_poses=area_poses,
        object_poses=object_poses,
        provenance=provenance,
        report=solve_report,
    )


# ---------------------------------------------------------------------------
# serialize
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _fmt_seq(values) -> str:
    return " ".join(_fmt(v) for v in values)


def serialize(value) -> RawDocument:
    """Serialize a SceneHierarchy or SceneLayout to canonical document text.

    Output is byte-stable and key-ordered; ``parse(serialize(h))``
    reproduces ``h`` exactly.
    """
    if isinstance(value, SceneLayout):
        hierarchy, layout = value.hierarchy, value
    else:
        hierarchy, layout = value, None

    out: list[str] = [f"format: {FORMAT_HEADER}"]
    out.append("scene:")
    out.append(f"  text: {hierarchy.root.text}")
    out.append(f"  size: {_fmt_seq(hierarchy.root.size)}")

    for area in hierarchy.areas:
        out.append(f"area {area.id}:")
        out.append(f"  text: {area.text}")
        out.append(f"  size: {_fmt_seq(area.size)}")
        out.append(f"  anchor: {area.anchor_object}")
        if area.pose is not None:
            out.append("  pose:")
            out.append(f"    center: {_fmt_seq(area.pose.center)}")
            out.append(f"    facing: {area.pose.facing}")
        for obj_id in area.members:
            obj = hierarchy.objects[obj_id]
            out.append(f"  object {obj.id}:")
            out.append(f"    text: {obj.text}")
            out.append(f"    category: {obj.category}")
            out.append(f"    size: {_fmt_seq(obj.size)}")
            if obj.asset is not None:
                out.append(f"    asset: {obj.asset}")
            if obj.pose is not None:
                out.append("    pose:")
                out.append(f"      center: {_fmt_seq(obj.pose.center)}")
                out.append(f"      theta: {obj.pose.theta}")

    for edge in hierarchy.relations:
        out.append("relation:")
        out.append(f"  from: {edge.from_id}")
        out.append(f"  to: {edge.to_id}")
        if edge.text is not None:
            out.append(f"  text: {edge.text}")
        if edge.rel_position is not None:
            out.append(f"  position: {_fmt_seq(edge.rel_position)}")
        if edge.rel_theta is not None:
            out.append(f"  theta: {edge.rel_theta}")
        if edge.aligned is not None:
            out.append(f"  aligned: {'true' if edge.aligned else 'false'}")

    if layout is not None:
        out.append("layout:")
        for area in hierarchy.areas:
            pose = layout.area_poses.get(area.id)
            if pose is None:
                continue
            out.append(f"  area {area.id}:")
            out.append(f"    center: {_fmt_seq(pose.center)}")
            out.append(f"    facing: {pose.facing}")
        for area in hierarchy.areas:
            for obj_id in area.members:
                pose = layout.object_poses.get(obj_id)
                if pose is None:
                    continue
                out.append(f"  object {obj_id}:")
                out.append(f"    center: {_fmt_seq(pose.center)}")
                out.append(f"    theta: {pose.theta}")
                if obj_id in layout.provenance:
                    out.append(f"    source: {layout.provenance[obj_id]}")
        if layout.report is not None:
            # Volatile counters (iterations, restarts, elapsed) stay
            # in-memory only so equal layouts serialize to equal bytes.
            rep = layout.report
            out.append("  report:")
            out.append(f"    feasible: {'true' if rep.feasible else 'false'}")
            out.append(f"    objective: {_fmt(rep.objective)}")
            out.append(f"    max_overlap: {_fmt(rep.max_overlap)}")
            out.append(f"    max_oob: {_fmt(rep.max_oob)}")
            if rep.wall_assignment:
                walls = " ".join(f"{k}={v}" for k, v in sorted(rep.wall_assignment.items()))
                out.append(f"    walls: {walls}")

    return RawDocument(text="\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Feasibility repair
# ---------------------------------------------------------------------------


def _fits(footprint: tuple[float, float], box: tuple[float, float]) -> bool:
    w, d = footprint
    return (w <= box[0] and d <= box[1]) or (d <= box[0] and w <= box[1])


def feasibility_repair(
    h: SceneHierarchy, seed: int = 0, budget_factor: float = BUDGET_FACTOR
) -> tuple[SceneHierarchy, ValidationReport]:
    """Drop objects/areas until the hierarchy fits the room.

    Objects that cannot fit their area are removed first (objects without a
    textual relation before related ones, then largest footprint first).
    Then whole areas are removed, largest footprint first, until the summed
    area footprints stay within ``budget_factor`` of the room area and each
    area fits the room.  Deterministic; the seed is recorded for the audit
    trail.  Raises Unrepairable when an anchor cannot fit its area or the
    last area cannot fit the room.
    """
    report = ValidationReport(seed=seed)
    has_text = {e.from_id for e in h.relations if e.text is not None}
    areas = list(h.areas)
    objects = dict(h.objects)
    dropped: list[str] = []

    # Per-object fit inside its own area.
    repaired_areas: list[FunctionalArea] = []
    for area in areas:
        misfits = [
            oid for oid in area.members
            if oid in objects and not _fits(objects[oid].footprint, area.size)
        ]
        if area.anchor_object in misfits:
            raise Unrepairable(
                f"anchor {area.anchor_object} ({objects[area.anchor_object].footprint} m) "
                f"cannot fit area {area.id} ({area.size} m)",
                report,
            )
        misfits.sort(key=lambda oid: (oid in has_text, -objects[oid].footprint[0] * objects[oid].footprint[1], oid))
        members = area.members
        for oid in misfits:
            members = tuple(m for m in members if m != oid)
            dropped.append(oid)
            report.repairs.append(f"removed object {oid}: footprint exceeds area {area.id}")
            del objects[oid]
        repaired_areas.append(replace(area, members=members))
    areas = repaired_areas

    # Room budget: drop whole areas, largest footprint first.
    room_area = h.root.size[0] * h.root.size[1]
    budget = budget_factor * room_area

    def over_budget() -> bool:
        total = sum(a.size[0] * a.size[1] for a in areas)
        return total > budget or any(not _fits(a.size, h.root.size) for a in areas)

    while areas and over_budget():
        if len(areas) == 1:
            raise Unrepairable(
                f"last area {areas[0].id} ({areas[0].size} m) still violates the room budget "
                f"({budget:.2f} m^2 of {room_area:.2f} m^2 room)",
                report,
            )
        victims = sorted(areas, key=lambda a: (_fits(a.size, h.root.size), -a.size[0] * a.size[1], a.id))
        victim = victims[0]
        areas.remove(victim)
        dropped.append(victim.id)
        report.repairs.append(f"removed area {victim.id}: room budget exceeded")
        for oid in victim.members:
            if oid in objects:
                dropped.append(oid)
                del objects[oid]

    surviving = set(objects)
    edges = tuple(e for e in h.relations if e.from_id in surviving and e.to_id in surviving)
    report.dropped = dropped
    repaired = SceneHierarchy(root=h.root, areas=tuple(areas), objects=objects, relations=edges)
    return repaired, report


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def load(path) -> tuple[SceneHierarchy, ValidationReport]:
    with open(path, encoding="utf-8") as fh:
        return parse(RawDocument(fh.read()))


def load_layout(path) -> tuple[SceneLayout, ValidationReport]:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(RawDocument(fh.read()))


def save(path, value) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(value).text)
