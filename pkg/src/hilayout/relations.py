"""Shared relation vocabulary: canonical offsets, geometric predicates, alignment rule.

Single source of truth so that synthetic training data, the rule-based
placement fallback, and the semantic-alignment checker all agree on what a
spatial relation phrase means.
"""

from __future__ import annotations

import math

# Closed vocabulary of textual spatial relations (lowercase canonical forms).
VOCABULARY = (
    "left of",
    "right of",
    "in front of",
    "behind",
    "next to",
)

# Clearance inserted between the two footprints by the canonical offsets.
CANONICAL_GAP = 0.05

# Two objects count as aligned when they share an orientation and either
# centered axis offset stays below this (meters).
ALIGN_EPS = 0.05

# Margins used by the semantic-alignment predicates (meters).
SIDE_MARGIN = 0.1
NEXT_TO_MAX_GAP = 0.3


def normalize_phrase(text: str) -> str | None:
    """Map a raw relation phrase to the vocabulary by exact lowercase match."""
    cleaned = " ".join(text.strip().lower().split())
    return cleaned if cleaned in VOCABULARY else None


def is_aligned(rel_position: tuple[float, float], rel_theta: int) -> bool:
    """Alignment indicator: equal orientation plus one near-centered axis."""
    if rel_theta % 360 != 0:
        return False
    return abs(rel_position[0]) < ALIGN_EPS or abs(rel_position[1]) < ALIGN_EPS


def canonical_offset(
    phrase: str,
    anchor_footprint: tuple[float, float],
    obj_footprint: tuple[float, float],
    mirror_index: int = 0,
) -> tuple[tuple[float, float], int]:
    """Canonical placement for a relation phrase, in the anchor frame.

    Returns ``(position, theta)`` where theta is the object orientation that
    faces the anchor.  ``mirror_index`` alternates the side for symmetric
    phrases ("next to"): even indices go +x, odd indices go -x.
    """
    aw, ad = anchor_footprint
    ow, od = obj_footprint
    dx = aw / 2.0 + ow / 2.0 + CANONICAL_GAP
    dy = ad / 2.0 + od / 2.0 + CANONICAL_GAP
    if phrase == "left of":
        return (-dx, 0.0), 270
    if phrase == "right of":
        return (dx, 0.0), 90
    if phrase == "in front of":
        return (0.0, dy), 180
    if phrase == "behind":
        return (0.0, -dy), 0
    if phrase == "next to":
        side = 1.0 if mirror_index % 2 == 0 else -1.0
        return (side * dx, 0.0), (90 if side > 0 else 270)
    raise KeyError(phrase)


def predicate_holds(
    phrase: str,
    rel_position: tuple[float, float],
    anchor_footprint: tuple[float, float],
    obj_footprint: tuple[float, float],
) -> bool:
    """Check a realized relative position against the relation's predicate.

    ``rel_position`` is the object center expressed in the anchor frame.
    """
    x, y = rel_position
    aw, ad = anchor_footprint
    ow, od = obj_footprint
    if phrase == "left of":
        return x < -SIDE_MARGIN and abs(y) < max(ad, od)
    if phrase == "right of":
        return x > SIDE_MARGIN and abs(y) < max(ad, od)
    if phrase == "in front of":
        return y > SIDE_MARGIN
    if phrase == "behind":
        return y < -SIDE_MARGIN
    if phrase == "next to":
        gap_x = max(0.0, abs(x) - (aw / 2.0 + ow / 2.0))
        gap_y = max(0.0, abs(y) - (ad / 2.0 + od / 2.0))
        return math.hypot(gap_x, gap_y) < NEXT_TO_MAX_GAP
    raise KeyError(phrase)
