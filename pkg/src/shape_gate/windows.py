"""Square scale windows: a doubling family searched by binary search.

Window 1 is the base building block; every later window doubles the previous
side. A blob maps to the smallest window whose side contains its longer
bounding-box side, and the family can grow by doubling when an object is
larger than the largest configured window.
"""
from __future__ import annotations

import math
from typing import NamedTuple


class ScaleWindow(NamedTuple):
    index: int   # ordinal, 1-based
    side: int    # pixels


def generate_windows(base: int, count: int) -> tuple[ScaleWindow, ...]:
    """Family of `count` windows with sides base * 2^(i-1)."""
    if base < 1:
        raise ValueError("base side must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    return tuple(ScaleWindow(i + 1, base * (2**i)) for i in range(count))


def map_to_window_counted(
    bbox_w: int, bbox_h: int, family: tuple[ScaleWindow, ...], extensible: bool = True
) -> tuple[ScaleWindow, int]:
    """Window for a bbox plus the number of side comparisons performed.

    Binary search finds the smallest window with side >= max(w, h); needs at
    most ceil(log2(len(family))) + 1 comparisons for in-family sizes. Larger
    objects either extend the family by doubling (extensible) or clamp to the
    largest window.
    """
    longest = max(bbox_w, bbox_h)
    comparisons = 1
    if longest > family[-1].side:
        if not extensible:
            return family[-1], comparisons
        index, side = family[-1].index, family[-1].side
        while True:
            index += 1
            side *= 2
            comparisons += 1
            if longest <= side:
                return ScaleWindow(index, side), comparisons
    lo, hi = 0, len(family) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        comparisons += 1
        if longest <= family[mid].side:
            hi = mid
        else:
            lo = mid + 1
    return family[lo], comparisons


def map_to_window(
    bbox_w: int, bbox_h: int, family: tuple[ScaleWindow, ...], extensible: bool = True
) -> ScaleWindow:
    return map_to_window_counted(bbox_w, bbox_h, family, extensible)[0]


def comparison_bound(family_size: int) -> int:
    """The advertised worst case for in-family lookups."""
    return math.ceil(math.log2(family_size)) + 1 if family_size > 1 else 1
