"""Divide-and-conquer layout optimization.

Local step: place each area's objects around its fixed anchor so realized
relative placements match the predicted targets (L1), with overlap and
out-of-boundary handled by an escalating penalty and exact 1-D line
searches over piecewise-linear breakpoints.  Global step: enumerate wall
assignments (areas back-flush against walls, facing inward) and spread
areas apart along their walls.  Editing adds an L1 anchoring term toward
the previous layout so unchanged objects stay put.

Every returned feasible layout satisfies pairwise overlap <= 1e-6 m^2 and
OOB <= 1e-6 m^2; identical inputs and seed reproduce the layout bit for
bit.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import EPS_OOB, EPS_OVERLAP, Obb2D, area_obb, oob_area, overlap_area
from .scene_model import (
    AreaPose,
    FunctionalArea,
    Pose2D,
    SceneHierarchy,
    SceneLayout,
    rel,
    to_scene_frame,
)

FACING_CHANGE_COST = 1.0


class Infeasible(Exception):
    def __init__(self, message: str, report: "SolveReport | None" = None):
        super().__init__(message)
        self.report = report


class TooManyAreas(Exception):
    pass


@dataclass
class SolverConfig:
    lambda_schedule: tuple[float, ...] = (10.0, 100.0, 1000.0, 10000.0)
    restarts: int = 8
    max_sweeps: int = 40
    anchor_weight: float = 5.0
    enumeration_cap: int = 6
    hard_cap: int = 12
    sa_iterations: int = 300
    track_history: bool = False


@dataclass
class SolveReport:
    feasible: bool = True
    objective: float = 0.0
    max_overlap: float = 0.0
    max_oob: float = 0.0
    iterations: int = 0
    restarts_used: int = 0
    wall_assignment: dict[str, str] = field(default_factory=dict)
    elapsed: float = 0.0
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class TargetPlacement:
    """Solver-facing target for one satellite: position, theta, alignment."""

    position: tuple[float, float]
    theta: int = 0
    aligned: bool = False


@dataclass
class LocalItem:
    obj_id: str
    footprint: tuple[float, float]
    theta: int
    target: tuple[float, float]
    aligned: bool = False
    prev: tuple[float, float] | None = None


@dataclass
class LocalProblem:
    area_id: str
    area_size: tuple[float, float]
    anchor_id: str
    anchor_footprint: tuple[float, float]
    items: list[LocalItem]


@dataclass
class GlobalArea:
    area_id: str
    size: tuple[float, float]
    prev: AreaPose | None = None


@dataclass
class GlobalProblem:
    room: tuple[float, float]
    areas: list[GlobalArea]
    anchor_weight: float = 0.0


def _half_extents(footprint: tuple[float, float], theta: int) -> tuple[float, float]:
    w, d = footprint
    if theta % 180 == 90:
        w, d = d, w
    return (w / 2.0, d / 2.0)


# ---------------------------------------------------------------------------
# Local optimization
# ---------------------------------------------------------------------------


def _pair_overlap_1d(lo_a, hi_a, lo_b, hi_b):
    return np.maximum(0.0, np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b))


class _LocalState:
    """Positions plus cached extents for the penalty descent."""

    def __init__(self, problem: LocalProblem, anchor_weight: float):
        self.problem = problem
        self.anchor_weight = anchor_weight
        self.half = [_half_extents(it.footprint, it.theta) for it in problem.items]
        self.anchor_half = _half_extents(problem.anchor_footprint, 0)
        aw, ad = problem.area_size
        self.ranges = []
        for hx, hy in self.half:
            lo_x, hi_x = -(aw / 2 - hx), (aw / 2 - hx)
            lo_y, hi_y = -(ad / 2 - hy), (ad / 2 - hy)
            if lo_x > hi_x or lo_y > hi_y:
                raise Infeasible(
                    f"object footprint {2 * hx:.2f}x{2 * hy:.2f} cannot fit area "
                    f"{problem.area_id} ({aw:.2f}x{ad:.2f})"
                )
            self.ranges.append(((lo_x, hi_x), (lo_y, hi_y)))
        self.pos = np.zeros((len(problem.items), 2))

    def clamp(self, i: int, axis: int, value: float) -> float:
        lo, hi = self.ranges[i][axis]
        return min(max(value, lo), hi)

    def objective(self) -> float:
        total = 0.0
        for i, item in enumerate(self.problem.items):
            total += abs(self.pos[i, 0] - item.target[0]) + abs(self.pos[i, 1] - item.target[1])
            if item.prev is not None:
                total += self.anchor_weight * (
                    abs(self.pos[i, 0] - item.prev[0]) + abs(self.pos[i, 1] - item.prev[1])
                )
        return total

    def _boxes(self):
        boxes = [((0.0, 0.0), self.anchor_half)]
        for i in range(len(self.problem.items)):
            boxes.append(((self.pos[i, 0], self.pos[i, 1]), self.half[i]))
        return boxes

    def penalty(self) -> float:
        boxes = self._boxes()
        total = 0.0
        for a, b in itertools.combinations(range(len(boxes)), 2):
            (ca, ha), (cb, hb) = boxes[a], boxes[b]
            ox = _pair_overlap_1d(ca[0] - ha[0], ca[0] + ha[0], cb[0] - hb[0], cb[0] + hb[0])
            oy = _pair_overlap_1d(ca[1] - ha[1], ca[1] + ha[1], cb[1] - hb[1], cb[1] + hb[1])
            total += float(ox * oy)
        return total

    def max_pair_overlap(self) -> float:
        boxes = self._boxes()
        worst = 0.0
        for a, b in itertools.combinations(range(len(boxes)), 2):
            (ca, ha), (cb, hb) = boxes[a], boxes[b]
            ox = _pair_overlap_1d(ca[0] - ha[0], ca[0] + ha[0], cb[0] - hb[0], cb[0] + hb[0])
            oy = _pair_overlap_1d(ca[1] - ha[1], ca[1] + ha[1], cb[1] - hb[1], cb[1] + hb[1])
            worst = max(worst, float(ox * oy))
        return worst

    def candidates(self, i: int, axis: int) -> np.ndarray:
        item = self.problem.items[i]
        lo, hi = self.ranges[i][axis]
        vals = [self.pos[i, axis], item.target[axis], 0.0, lo, hi]
        if item.prev is not None:
            vals.append(item.prev[axis])
        hi_i = self.half[i][axis]
        others = [((0.0, 0.0), self.anchor_half)] + [
            ((self.pos[j, 0], self.pos[j, 1]), self.half[j])
            for j in range(len(self.problem.items))
            if j != i
        ]
        for (cx, cy), hb in others:
            c = (cx, cy)[axis]
            h = hb[axis]
            vals += [c - (hi_i + h), c + (hi_i + h), c - abs(hi_i - h), c + abs(hi_i - h), c]
        arr = np.clip(np.array(vals), lo, hi)
        return np.unique(arr)

    def step_cost(self, i: int, axis: int, values: np.ndarray, lam: float) -> np.ndarray:
        """Penalized cost restricted to terms that involve item i."""
        item = self.problem.items[i]
        cost = np.abs(values - item.target[axis])
        if item.prev is not None:
            cost += self.anchor_weight * np.abs(values - item.prev[axis])
        fixed_axis = 1 - axis
        fixed_val = self.pos[i, fixed_axis]
        hx_i = self.half[i][axis]
        hf_i = self.half[i][fixed_axis]
        others = [((0.0, 0.0), self.anchor_half)] + [
            ((self.pos[j, 0], self.pos[j, 1]), self.half[j])
            for j in range(len(self.problem.items))
            if j != i
        ]
        for (cx, cy), hb in others:
            c_move = (cx, cy)[axis]
            c_fixed = (cx, cy)[fixed_axis]
            o_fixed = _pair_overlap_1d(
                fixed_val - hf_i, fixed_val + hf_i, c_fixed - hb[fixed_axis], c_fixed + hb[fixed_axis]
            )
            if o_fixed <= 0.0:
                continue
            o_move = _pair_overlap_1d(values - hx_i, values + hx_i, c_move - hb[axis], c_move + hb[axis])
            cost += lam * o_move * o_fixed
        return cost


def solve_local(
    problem: LocalProblem,
    seed: int = 0,
    config: SolverConfig | None = None,
    anchor_weight: float | None = None,
) -> tuple[dict[str, Pose2D], SolveReport]:
    """Solve one area's object placement around its fixed anchor.

    The anchor sits at the area-frame origin facing +y; satellite
    orientations are fixed from their targets and only positions are
    optimized.  Returns area-local poses for every member including the
    anchor.
    """
    config = config or SolverConfig()
    mu = config.anchor_weight if anchor_weight is None else anchor_weight
    t0 = time.perf_counter()
    report = SolveReport()

    poses = {problem.anchor_id: Pose2D((0.0, 0.0), 0)}
    if not problem.items:
        report.elapsed = time.perf_counter() - t0
        return poses, report

    state = _LocalState(problem, mu)
    rng = np.random.default_rng(seed)

    best_pos = None
    best_key = None
    for restart in range(max(1, config.restarts)):
        if restart == 0:
            for i, item in enumerate(problem.items):
                state.pos[i, 0] = state.clamp(i, 0, item.target[0])
                state.pos[i, 1] = state.clamp(i, 1, item.target[1])
        else:
            scale = 0.25 * restart
            for i, item in enumerate(problem.items):
                jx = item.target[0] + float(rng.normal(0.0, scale))
                jy = item.target[1] + float(rng.normal(0.0, scale))
                state.pos[i, 0] = state.clamp(i, 0, jx)
                state.pos[i, 1] = state.clamp(i, 1, jy)

        for lam in config.lambda_schedule:
            round_vals = [state.objective() + lam * state.penalty()]
            for _ in range(config.max_sweeps):
                improved = False
                for i in range(len(problem.items)):
                    for axis in (0, 1):
                        values = state.candidates(i, axis)
                        cost = state.step_cost(i, axis, values, lam)
                        k = int(np.argmin(cost))
                        cur_cost = float(
                            state.step_cost(i, axis, np.array([state.pos[i, axis]]), lam)[0]
                        )
                        if cost[k] < cur_cost - 1e-12:
                            state.pos[i, axis] = float(values[k])
                            improved = True
                report.iterations += 1
                round_vals.append(state.objective() + lam * state.penalty())
                if not improved:
                    break
            if config.track_history:
                report.history.append((restart, lam, round_vals))

        # Alignment snap: zero the smaller axis offset when it stays feasible.
        if state.max_pair_overlap() <= EPS_OVERLAP:
            for i, item in enumerate(problem.items):
                if not item.aligned:
                    continue
                axis = 0 if abs(state.pos[i, 0]) <= abs(state.pos[i, 1]) else 1
                old = state.pos[i, axis]
                snapped = state.clamp(i, axis, 0.0)
                state.pos[i, axis] = snapped
                if state.max_pair_overlap() > EPS_OVERLAP:
                    state.pos[i, axis] = old

        overlap = state.max_pair_overlap()
        key = (overlap > EPS_OVERLAP, state.objective())
        if best_key is None or key < best_key:
            best_key = key
            best_pos = state.pos.copy()
            report.restarts_used = restart + 1
        if not key[0] and restart == 0:
            break  # clamped-target start already feasible and optimal-ish

    state.pos = best_pos
    if best_key[0]:
        greedy = _greedy_pack(problem, state)
        if greedy is None:
            report.feasible = False
            report.max_overlap = state.max_pair_overlap()
            report.objective = state.objective()
            raise Infeasible(
                f"area {problem.area_id}: no feasible arrangement found "
                f"(max overlap {report.max_overlap:.4f} m^2)",
                report,
            )
        state.pos = greedy

    report.max_overlap = state.max_pair_overlap()
    report.feasible = report.max_overlap <= EPS_OVERLAP
    report.objective = state.objective()
    report.elapsed = time.perf_counter() - t0

    for i, item in enumerate(problem.items):
        poses[item.obj_id] = Pose2D((float(state.pos[i, 0]), float(state.pos[i, 1])), item.theta % 360)
    return poses, report


def _greedy_pack(problem: LocalProblem, state: _LocalState) -> np.ndarray | None:
    """Sequential fallback: largest objects first on a 5 cm grid."""
    order = sorted(
        range(len(problem.items)),
        key=lambda i: (-problem.items[i].footprint[0] * problem.items[i].footprint[1], i),
    )
    placed = [((0.0, 0.0), state.anchor_half)]
    pos = np.zeros_like(state.pos)
    for i in order:
        item = problem.items[i]
        (lo_x, hi_x), (lo_y, hi_y) = state.ranges[i]
        xs = np.arange(lo_x, hi_x + 1e-9, 0.05) if hi_x > lo_x else np.array([lo_x])
        ys = np.arange(lo_y, hi_y + 1e-9, 0.05) if hi_y > lo_y else np.array([lo_y])
        grid = [(x, y) for x in xs for y in ys]
        grid.sort(key=lambda p: (abs(p[0] - item.target[0]) + abs(p[1] - item.target[1]), p))
        hx, hy = state.half[i]
        found = False
        for x, y in grid:
            ok = True
            for (cx, cy), (ohx, ohy) in placed:
                ox = min(x + hx, cx + ohx) - max(x - hx, cx - ohx)
                oy = min(y + hy, cy + ohy) - max(y - hy, cy - ohy)
                if ox > 0 and oy > 0 and ox * oy > EPS_OVERLAP:
                    ok = False
                    break
            if ok:
                pos[i] = (x, y)
                placed.append(((x, y), (hx, hy)))
                found = True
                break
        if not found:
            return None
    return pos


# ---------------------------------------------------------------------------
# Global optimization
# ---------------------------------------------------------------------------

_WALLS = ("+y", "-y", "+x", "-x")


def _wall_slot(room, size, facing):
    """Fixed coordinate, free-axis index, half extents, and offset range."""
    rw, rd = room
    w, d = size
    if facing in ("+y", "-y"):
        half = (w / 2.0, d / 2.0)
        fixed = -(rd / 2.0) + d / 2.0 if facing == "+y" else (rd / 2.0) - d / 2.0
        free_axis = 0
        limit = rw / 2.0 - w / 2.0
    else:
        half = (d / 2.0, w / 2.0)
        fixed = -(rw / 2.0) + d / 2.0 if facing == "+x" else (rw / 2.0) - d / 2.0
        free_axis = 1
        limit = rd / 2.0 - w / 2.0
    if d > (rd if facing in ("+y", "-y") else rw) or limit < 0:
        return None
    return fixed, free_axis, half, (-limit, limit)


class _GlobalState:
    def __init__(self, problem: GlobalProblem, facings: tuple[str, ...]):
        self.problem = problem
        self.facings = facings
        self.slots = []
        for ga, facing in zip(problem.areas, facings):
            slot = _wall_slot(problem.room, ga.size, facing)
            if slot is None:
                raise Infeasible(f"area {ga.area_id} cannot fit against wall {facing}")
            self.slots.append(slot)
        self.offsets = np.zeros(len(problem.areas))

    def center(self, i: int) -> tuple[float, float]:
        fixed, free_axis, _, _ = self.slots[i]
        t = float(self.offsets[i])
        return (t, fixed) if free_axis == 0 else (fixed, t)

    def box(self, i: int) -> tuple[tuple[float, float], tuple[float, float]]:
        _, _, half, _ = self.slots[i]
        return self.center(i), half

    def pair_metrics(self, i: int, j: int) -> tuple[float, float]:
        """(gap, overlap) for one area pair; exactly one of them is nonzero."""
        (ci, hi), (cj, hj) = self.box(i), self.box(j)
        ox = min(ci[0] + hi[0], cj[0] + hj[0]) - max(ci[0] - hi[0], cj[0] - hj[0])
        oy = min(ci[1] + hi[1], cj[1] + hj[1]) - max(ci[1] - hi[1], cj[1] - hj[1])
        if ox > 0.0 and oy > 0.0:
            return 0.0, ox * oy
        return math.hypot(max(0.0, -ox), max(0.0, -oy)), 0.0

    def objective(self) -> float:
        """Eq-style value: sum |D_w| (0 by construction) - sum pairwise gaps."""
        total = 0.0
        n = len(self.problem.areas)
        for i in range(n):
            for j in range(i + 1, n):
                gap, _ = self.pair_metrics(i, j)
                total -= gap
        return total

    def anchoring(self) -> float:
        if self.problem.anchor_weight <= 0:
            return 0.0
        total = 0.0
        for i, ga in enumerate(self.problem.areas):
            if ga.prev is None:
                continue
            cx, cy = self.center(i)
            total += abs(cx - ga.prev.center[0]) + abs(cy - ga.prev.center[1])
            if self.facings[i] != ga.prev.facing:
                total += FACING_CHANGE_COST
        return self.problem.anchor_weight * total

    def penalty(self) -> float:
        total = 0.0
        n = len(self.problem.areas)
        for i in range(n):
            for j in range(i + 1, n):
                _, ov = self.pair_metrics(i, j)
                total += ov
        return total

    def max_overlap(self) -> float:
        worst = 0.0
        n = len(self.problem.areas)
        for i in range(n):
            for j in range(i + 1, n):
                _, ov = self.pair_metrics(i, j)
                worst = max(worst, ov)
        return worst

    def descend(self, lam_schedule, max_sweeps) -> int:
        iterations = 0
        n = len(self.problem.areas)
        for lam in lam_schedule:
            for _ in range(max_sweeps):
                improved = False
                for i in range(n):
                    _, free_axis, half_i, (lo, hi) = self.slots[i]
                    vals = {self.offsets[i], lo, hi, 0.0}
                    ga = self.problem.areas[i]
                    if ga.prev is not None:
                        vals.add(ga.prev.center[free_axis])
                    h_i = half_i[free_axis]
                    for j in range(n):
                        if j == i:
                            continue
                        cj = self.center(j)
                        hj = self.box(j)[1][free_axis]
                        c = cj[free_axis]
                        vals.update((c - (h_i + hj), c + (h_i + hj), c - abs(h_i - hj), c + abs(h_i - hj), c))
                    candidates = np.unique(np.clip(np.array(sorted(vals)), lo, hi))
                    cur = float(self.offsets[i])
                    best_v, best_c = cur, self._local_cost(i, cur, lam)
                    for v in candidates:
                        c = self._local_cost(i, float(v), lam)
                        if c < best_c - 1e-12:
                            best_v, best_c = float(v), c
                    if best_v != cur:
                        self.offsets[i] = best_v
                        improved = True
                iterations += 1
                if not improved:
                    break
        return iterations

    def _local_cost(self, i: int, value: float, lam: float) -> float:
        old = self.offsets[i]
        self.offsets[i] = value
        total = 0.0
        for j in range(len(self.problem.areas)):
            if j == i:
                continue
            gap, ov = self.pair_metrics(i, j)
            total += -gap + lam * ov
        ga = self.problem.areas[i]
        if ga.prev is not None and self.problem.anchor_weight > 0:
            cx, cy = self.center(i)
            total += self.problem.anchor_weight * (
                abs(cx - ga.prev.center[0]) + abs(cy - ga.prev.center[1])
            )
        self.offsets[i] = old
        return total


def _evaluate_assignment(problem: GlobalProblem, facings, config: SolverConfig):
    try:
        state = _GlobalState(problem, facings)
    except Infeasible:
        return None
    for i, ga in enumerate(problem.areas):
        _, free_axis, _, (lo, hi) = state.slots[i]
        if ga.prev is not None and facings[i] == ga.prev.facing:
            state.offsets[i] = min(max(ga.prev.center[free_axis], lo), hi)
    iterations = state.descend(config.lambda_schedule, config.max_sweeps)
    overlap = state.max_overlap()
    score = state.objective() + state.anchoring()
    return state, score, overlap, iterations


def solve_global(
    problem: GlobalProblem, seed: int = 0, config: SolverConfig | None = None
) -> tuple[dict[str, AreaPose], SolveReport]:
    """Arrange areas against walls, facing inward, spread apart."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    k = len(problem.areas)
    report = SolveReport()
    if k == 0:
        report.elapsed = time.perf_counter() - t0
        return {}, report
    if k > config.hard_cap:
        raise TooManyAreas(f"{k} areas exceeds the hard cap of {config.hard_cap}")

    best = None  # (overlap_bad, score, index, state, facings, iterations)
    if k <= config.enumeration_cap:
        for idx, facings in enumerate(itertools.product(_WALLS, repeat=k)):
            out = _evaluate_assignment(problem, facings, config)
            if out is None:
                continue
            state, score, overlap, iterations = out
            report.iterations += iterations
            key = (overlap > EPS_OVERLAP, score, idx)
            if best is None or key < best[0]:
                best = (key, state, facings)
    else:
        # Seeded annealing over wall assignments.
        rng = np.random.default_rng(seed)
        facings = tuple(_WALLS[int(rng.integers(4))] for _ in range(k))
        current = _evaluate_assignment(problem, facings, config)
        attempts = 0
        while current is None and attempts < 50:
            facings = tuple(_WALLS[int(rng.integers(4))] for _ in range(k))
            current = _evaluate_assignment(problem, facings, config)
            attempts += 1
        if current is None:
            raise Infeasible("no wall assignment fits the room", report)
        state, score, overlap, iterations = current
        report.iterations += iterations
        best = ((overlap > EPS_OVERLAP, score, 0), state, facings)
        cur_key = best[0]
        temperature = 1.0
        for step in range(config.sa_iterations):
            flip = int(rng.integers(k))
            proposal = list(facings)
            proposal[flip] = _WALLS[int(rng.integers(4))]
            out = _evaluate_assignment(problem, tuple(proposal), config)
            if out is None:
                continue
            p_state, p_score, p_overlap, p_iter = out
            report.iterations += p_iter
            key = (p_overlap > EPS_OVERLAP, p_score, step + 1)
            delta = (p_score - cur_key[1]) + (1e6 if key[0] and not cur_key[0] else 0.0)
            if key[:2] < cur_key[:2] or rng.random() < math.exp(-max(delta, 0.0) / max(temperature, 1e-9)):
                facings = tuple(proposal)
                cur_key = key
                if best is None or key[:2] < best[0][:2]:
                    best = (key, p_state, facings)
            temperature *= 0.98

    if best is None:
        raise Infeasible("no wall assignment fits the room", report)
    key, state, facings = best
    if key[0]:
        report.feasible = False
        report.max_overlap = state.max_overlap()
        raise Infeasible(
            f"areas cannot be arranged without overlap (best residual {report.max_overlap:.4f} m^2)",
            report,
        )

    poses = {}
    for i, ga in enumerate(problem.areas):
        poses[ga.area_id] = AreaPose(center=state.center(i), facing=facings[i])
        report.wall_assignment[ga.area_id] = facings[i]
    report.objective = state.objective()
    report.max_overlap = state.max_overlap()
    report.feasible = True
    report.elapsed = time.perf_counter() - t0
    return poses, report


# ---------------------------------------------------------------------------
# Whole-scene orchestration (local solves + global solve + composition)
# ---------------------------------------------------------------------------


def build_local_problem(
    hierarchy: SceneHierarchy,
    area: FunctionalArea,
    placements: dict[str, TargetPlacement],
    previous_local: dict[str, tuple[float, float]] | None = None,
) -> LocalProblem:
    items = []
    for oid in area.members:
        if oid == area.anchor_object:
            continue
        if oid not in placements:
            raise KeyError(f"no placement target for object {oid}")
        tp = placements[oid]
        items.append(
            LocalItem(
                obj_id=oid,
                footprint=hierarchy.objects[oid].footprint,
                theta=tp.theta % 360,
                target=tp.position,
                aligned=tp.aligned,
                prev=(previous_local or {}).get(oid),
            )
        )
    return LocalProblem(
        area_id=area.id,
        area_size=area.size,
        anchor_id=area.anchor_object,
        anchor_footprint=hierarchy.objects[area.anchor_object].footprint,
        items=items,
    )


def _previous_local_poses(previous: SceneLayout) -> dict[str, tuple[float, float]]:
    """Recover area-local centers from a solved layout."""
    out = {}
    for area in previous.hierarchy.areas:
        pose = previous.area_poses.get(area.id)
        if pose is None:
            continue
        area_as_pose = Pose2D(pose.center, pose.angle)
        for oid in area.members:
            sp = previous.object_poses.get(oid)
            if sp is None:
                continue
            (x, y), _ = rel(sp, area_as_pose)
            out[oid] = (x, y)
    return out


def solve_scene(
    hierarchy: SceneHierarchy,
    placements: dict[str, TargetPlacement],
    seed: int = 0,
    config: SolverConfig | None = None,
    previous: SceneLayout | None = None,
) -> SceneLayout:
    """Run local solves per area, the global arrangement, and composition."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    mu = config.anchor_weight if previous is not None else 0.0
    prev_local = _previous_local_poses(previous) if previous is not None else {}
    prev_areas = previous.area_poses if previous is not None else {}

    solved = hierarchy
    total = SolveReport()
    for area in hierarchy.areas:
        problem = build_local_problem(hierarchy, area, placements, prev_local if previous else None)
        poses, rep = solve_local(problem, seed=seed, config=config, anchor_weight=mu)
        total.objective += rep.objective
        total.iterations += rep.iterations
        total.restarts_used = max(total.restarts_used, rep.restarts_used)
        total.max_overlap = max(total.max_overlap, rep.max_overlap)
        for oid, pose in poses.items():
            solved = solved.with_object_pose(oid, pose)

    gp = GlobalProblem(
        room=hierarchy.root.size,
        areas=[
            GlobalArea(area_id=a.id, size=a.size, prev=prev_areas.get(a.id) if previous else None)
            for a in hierarchy.areas
        ],
        anchor_weight=mu,
    )
    area_poses, grep = solve_global(gp, seed=seed, config=config)
    total.objective += grep.objective
    total.iterations += grep.iterations
    total.max_overlap = max(total.max_overlap, grep.max_overlap)
    total.wall_assignment = grep.wall_assignment
    for area_id, pose in area_poses.items():
        solved = solved.with_area_pose(area_id, pose)

    layout = to_scene_frame(solved)
    layout = _nudge_cross_area(layout, config)
    total.max_overlap = max(total.max_overlap, _scene_max_overlap(layout))
    total.max_oob = _scene_max_oob(layout)
    total.feasible = total.max_overlap <= EPS_OVERLAP and total.max_oob <= EPS_OOB
    total.elapsed = time.perf_counter() - t0
    return replace(layout, report=total)


def object_boxes(layout: SceneLayout) -> dict[str, Obb2D]:
    return {
        oid: Obb2D(
            center=pose.center,
            half_extents=(
                layout.hierarchy.objects[oid].size[0] / 2.0,
                layout.hierarchy.objects[oid].size[1] / 2.0,
            ),
            theta=pose.theta,
        )
        for oid, pose in layout.object_poses.items()
    }


def _scene_max_overlap(layout: SceneLayout) -> float:
    boxes = object_boxes(layout)
    ids = sorted(boxes)
    worst = 0.0
    for a, b in itertools.combinations(ids, 2):
        worst = max(worst, overlap_area(boxes[a], boxes[b]))
    return worst


def _scene_max_oob(layout: SceneLayout) -> float:
    room = layout.hierarchy.root.size
    worst = 0.0
    for box in object_boxes(layout).values():
        worst = max(worst, oob_area(box, room))
    return worst


def _nudge_cross_area(layout: SceneLayout, config: SolverConfig) -> SceneLayout:
    """Resolve rare cross-area object collisions after composition."""
    area_of = {oid: a.id for a in layout.hierarchy.areas for oid in a.members}
    anchor_ids = {a.anchor_object for a in layout.hierarchy.areas}
    poses = dict(layout.object_poses)

    for _ in range(10):
        boxes = {
            oid: Obb2D(
                center=poses[oid].center,
                half_extents=(
                    layout.hierarchy.objects[oid].size[0] / 2.0,
                    layout.hierarchy.objects[oid].size[1] / 2.0,
                ),
                theta=poses[oid].theta,
            )
            for oid in poses
        }
        offenders = [
            (a, b)
            for a, b in itertools.combinations(sorted(poses), 2)
            if area_of[a] != area_of[b] and overlap_area(boxes[a], boxes[b]) > EPS_OVERLAP
        ]
        if not offenders:
            break
        for a, b in offenders:
            mover = b if b not in anchor_ids else a
            other = a if mover == b else b
            mbox, obox = boxes[mover], boxes[other]
            area = next(ar for ar in layout.hierarchy.areas if ar.id == area_of[mover])
            arect = area_obb(area.size, layout.area_poses[area.id])
            shifts = []
            mhx, mhy = mbox.half_extents if mbox.theta % 180 == 0 else mbox.half_extents[::-1]
            ohx, ohy = obox.half_extents if obox.theta % 180 == 0 else obox.half_extents[::-1]
            for axis, mh, oh in ((0, mhx, ohx), (1, mhy, ohy)):
                delta = (oh + mh) - abs(mbox.center[axis] - obox.center[axis])
                if delta <= 0:
                    continue
                sign = 1.0 if mbox.center[axis] >= obox.center[axis] else -1.0
                vec = [0.0, 0.0]
                vec[axis] = sign * (delta + 1e-6)
                shifts.append((abs(vec[axis]), tuple(vec)))
            for _, (dx, dy) in sorted(shifts):
                candidate = Pose2D((mbox.center[0] + dx, mbox.center[1] + dy), poses[mover].theta)
                cbox = Obb2D(candidate.center, mbox.half_extents, candidate.theta)
                # Stay inside the own area rectangle.
                rel_dx = abs(candidate.center[0] - arect.center[0])
                rel_dy = abs(candidate.center[1] - arect.center[1])
                chx, chy = cbox.half_extents if cbox.theta % 180 == 0 else cbox.half_extents[::-1]
                ahx, ahy = arect.half_extents if arect.theta % 180 == 0 else arect.half_extents[::-1]
                if rel_dx + chx <= ahx + 1e-9 and rel_dy + chy <= ahy + 1e-9:
                    poses[mover] = candidate
                    break

    return replace(layout, object_poses=poses)


def solve_edit(
    previous: SceneLayout,
    updated: SceneHierarchy,
    placements: dict[str, TargetPlacement],
    seed: int = 0,
    config: SolverConfig | None = None,
) -> SceneLayout:
    """Re-solve after an edit, keeping unchanged placements where possible."""
    layout = solve_scene(updated, placements, seed=seed, config=config, previous=previous)

    # Sub-nanometer drift from frame round trips would break byte-stable
    # no-op edits; restore the exact previous pose when nothing moved.
    area_poses = dict(layout.area_poses)
    for aid, pose in previous.area_poses.items():
        new = area_poses.get(aid)
        if (
            new is not None
            and new.facing == pose.facing
            and abs(new.center[0] - pose.center[0]) <= 1e-9
            and abs(new.center[1] - pose.center[1]) <= 1e-9
        ):
            area_poses[aid] = pose
    object_poses = dict(layout.object_poses)
    for oid, pose in previous.object_poses.items():
        new = object_poses.get(oid)
        if (
            new is not None
            and new.theta == pose.theta
            and abs(new.center[0] - pose.center[0]) <= 1e-9
            and abs(new.center[1] - pose.center[1]) <= 1e-9
        ):
            object_poses[oid] = pose
    return replace(layout, area_poses=area_poses, object_poses=object_poses)
