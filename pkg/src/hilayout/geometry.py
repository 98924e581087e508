"""Oriented-bounding-box geometry kernel.

Orientations are multiples of 90 degrees, so every box canonicalizes to an
axis-aligned rectangle and all quantities below are exact rectangle
arithmetic, no polygon clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scene_model import AreaPose, FunctionalArea, Pose2D, THETAS

# Feasibility thresholds used everywhere downstream (m^2).
EPS_OVERLAP = 1e-6
EPS_OOB = 1e-6


@dataclass(frozen=True)
class Obb2D:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    theta: int = 0

    def __post_init__(self):
        if self.theta not in THETAS:
            raise ValueError(f"theta must be one of {THETAS}")
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ValueError("half_extents must be positive")

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]


def _aligned_bounds(box: Obb2D) -> tuple[float, float, float, float]:
    """Axis-aligned (xmin, ymin, xmax, ymax) after canonicalizing theta."""
    hx, hy = box.half_extents
    if box.theta in (90, 270):
        hx, hy = hy, hx
    cx, cy = box.center
    return (cx - hx, cy - hy, cx + hx, cy + hy)


def overlap_area(a: Obb2D, b: Obb2D) -> float:
    """Exact intersection area of two boxes (0 iff interiors disjoint)."""
    ax0, ay0, ax1, ay1 = _aligned_bounds(a)
    bx0, by0, bx1, by1 = _aligned_bounds(b)
    w = min(ax1, bx1) - max(ax0, bx0)
    h = min(ay1, by1) - max(ay0, by0)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def oob_area(box: Obb2D, bounds: tuple[float, float]) -> float:
    """Area of ``box`` outside an origin-centered bounds rectangle."""
    x0, y0, x1, y1 = _aligned_bounds(box)
    bx, by = bounds[0] / 2.0, bounds[1] / 2.0
    w_in = max(0.0, min(x1, bx) - max(x0, -bx))
    h_in = max(0.0, min(y1, by) - max(y0, -by))
    return (x1 - x0) * (y1 - y0) - w_in * h_in


def max_protrusion(box: Obb2D, bounds: tuple[float, float]) -> float:
    """Largest linear distance (m) the box sticks out past the bounds."""
    x0, y0, x1, y1 = _aligned_bounds(box)
    bx, by = bounds[0] / 2.0, bounds[1] / 2.0
    return max(0.0, x1 - bx, -bx - x0, y1 - by, -by - y0)


def rect_gap(a: Obb2D, b: Obb2D) -> float:
    """Euclidean gap between two boxes; 0 when touching or overlapping."""
    ax0, ay0, ax1, ay1 = _aligned_bounds(a)
    bx0, by0, bx1, by1 = _aligned_bounds(b)
    dx = max(0.0, max(ax0, bx0) - min(ax1, bx1))
    dy = max(0.0, max(ay0, by0) - min(ay1, by1))
    return math.hypot(dx, dy)


def obb_for_object(size: tuple[float, ...], pose: Pose2D) -> Obb2D:
    """Footprint box of an object at a pose (height ignored)."""
    return Obb2D(center=pose.center, half_extents=(size[0] / 2.0, size[1] / 2.0), theta=pose.theta)


def area_obb(area_size: tuple[float, float], pose: AreaPose) -> Obb2D:
    """Area rectangle in the scene frame: local +y maps onto the facing."""
    return Obb2D(
        center=pose.center,
        half_extents=(area_size[0] / 2.0, area_size[1] / 2.0),
        theta=pose.angle % 180,
    )


def wall_distance(area: FunctionalArea, room: tuple[float, float]) -> float:
    """Distance from the area's back edge to the wall it faces away from.

    The back side is opposite the facing; 0 means flush against that wall.
    """
    if area.pose is None:
        raise ValueError(f"area {area.id} has no pose")
    fx, fy = _FACING_VECTOR[area.pose.facing]
    depth = area.size[1]
    along = area.pose.center[0] * fx + area.pose.center[1] * fy
    room_half = (room[0] / 2.0) if fy == 0 else (room[1] / 2.0)
    return max(0.0, along - depth / 2.0 + room_half)


def area_distance(a: Obb2D, b: Obb2D) -> float:
    """Gap between two area rectangles (alias kept for the solver objective)."""
    return rect_gap(a, b)


_FACING_VECTOR = {"+x": (1.0, 0.0), "-x": (-1.0, 0.0), "+y": (0.0, 1.0), "-y": (0.0, -1.0)}


def facing_vector(facing: str) -> tuple[float, float]:
    return _FACING_VECTOR[facing]
