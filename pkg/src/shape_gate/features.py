"""Blob descriptors and the primitive shape classifier.

The 12-dimensional feature vector is:

    f1  circularity 4*pi*A / P^2
    f2  extent A / (bbox w * h)
    f3  aspect min(w, h) / max(w, h)
    f4  solidity A / (lattice points covered by the convex hull)
    f5  eccentricity from central second moments
    f6..f12  log-compressed rotation-invariant moments

All raw moment sums are accumulated over bbox-local integer coordinates, so
translation invariance is exact down to the bit. Every component is bounded,
which makes plain Euclidean distance meaningful for cluster comparison.
"""
from __future__ import annotations

import math
from enum import IntEnum

import numpy as np
from scipy import ndimage

from .config import ShapeConfig
from .preprocess import ObjectBlob, thin_mask

FEATURE_DIMS = 12
FEATURE_NAMES = (
    "circularity", "extent", "aspect", "solidity", "eccentricity",
    "inv1", "inv2", "inv3", "inv4", "inv5", "inv6", "inv7",
)

# dynamic-range compression for the invariant moments: values live around
# 1e-12..1e0, so scale by 1e12 before the log and divide by the 12 decades
_MOMENT_SCALE = 1e12
_MOMENT_DECADES = 12.0


class ShapeClass(IntEnum):
    """Primitive shape classes keying the cluster index (codes persist)."""

    LINE = 1
    SQUARE = 2
    RECTANGLE = 3
    CIRCLE = 4
    TRIANGLE = 5
    ARC = 6
    BLOB = 7


# Moore neighborhood, clockwise from east: used by the contour tracer
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
# Diagonal steps inside smooth runs are weighted below sqrt(2): the staircase
# chain of a digitized curve overestimates arc length at full diagonal weight,
# and 1.3 keeps digital disks near 2*pi*r while axis edges stay exact at 1.
_DIAG_SMOOTH = 1.3
# A lone diagonal bridging two perpendicular axis steps is a clipped right
# angle (median filtering chamfers corners like this); restoring it to 2
# keeps a denoised square at the square's own perimeter.
_DIAG_CORNER = 2.0


def _trace_directions(mask: np.ndarray) -> list[int]:
    """Direction codes of the closed outer boundary walk of one component.

    Moore-neighbor tracing through pixel centers; stops when the first move
    repeats (same pixel entered from the same direction).
    """
    ys, xs = np.nonzero(mask)
    if len(ys) == 1:
        return []
    padded = np.pad(mask, 1)
    start = (int(xs[np.argmin(ys * mask.shape[1] + xs)]) + 1, int(ys.min()) + 1)
    # we "arrived" moving east onto the topmost-leftmost pixel, so the
    # backtrack point is its west neighbor, which is background
    moves: list[int] = []
    current = start
    prev_dir = 0
    first_move = None
    # a closed walk visits each boundary pixel at most 4 times; the cap only
    # exists to bound pathological inputs
    for _ in range(8 * len(ys) + 8):
        for step in range(1, 9):
            d = (prev_dir + 4 + step) % 8
            dx, dy = _MOORE[d]
            nxt = (current[0] + dx, current[1] + dy)
            if padded[nxt[1], nxt[0]]:
                moves.append(d)
                current = nxt
                prev_dir = d
                break
        else:
            return []  # unreachable for a connected component; safety
        if first_move is None:
            first_move = (current, prev_dir)
            continue
        if current == first_move[0] and prev_dir == first_move[1]:
            return moves[:-1]  # drop the duplicated closing step
    return moves


def _trace_length(mask: np.ndarray) -> float:
    """Weighted length of the outer boundary walk (see weights above)."""
    moves = _trace_directions(mask)
    n = len(moves)
    total = 0.0
    for i, d in enumerate(moves):
        if d % 2 == 0:
            total += 1.0
            continue
        before = moves[(i - 1) % n]
        after = moves[(i + 1) % n]
        if before % 2 == 0 and after % 2 == 0 and before != after:
            total += _DIAG_CORNER
        else:
            total += _DIAG_SMOOTH
    return total


def perimeter(blob: ObjectBlob) -> float:
    """Boundary length estimate over all components of the blob.

    Each 8-connected component contributes its contour-walk length plus 4,
    calibrated so a solid axis-aligned s x s square measures exactly 4s
    (continuous limit) and a digital disk of radius r lands near 2*pi*r.
    """
    mask = blob.local_mask()
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    total = 0.0
    for i in range(1, n + 1):
        total += _trace_length(labels == i) + 4.0
    return total


def _hull(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Monotone-chain convex hull (counterclockwise, no duplicate endpoint)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def hull_lattice_count(blob: ObjectBlob) -> int:
    """Lattice points covered by the convex hull of the blob's pixel centers.

    Uses Pick's theorem (points = area + boundary/2 + 1), which makes the
    solidity of any solid convex raster exactly 1.0 and keeps it <= 1 always.
    """
    x0, y0, _, _ = blob.bbox
    pts = [(x - x0, y - y0) for x, y in blob.pixels]
    hull = _hull(pts)
    if len(hull) == 1:
        return 1
    if len(hull) == 2:
        (ax, ay), (bx, by) = hull
        return math.gcd(abs(bx - ax), abs(by - ay)) + 1
    area2 = 0
    boundary = 0
    for i, (ax, ay) in enumerate(hull):
        bx, by = hull[(i + 1) % len(hull)]
        area2 += ax * by - bx * ay
        boundary += math.gcd(abs(bx - ax), abs(by - ay))
    area2 = abs(area2)
    return (area2 + boundary + 2) // 2


def _raw_sums(blob: ObjectBlob):
    """Integer power sums over bbox-local coordinates (exact arithmetic)."""
    x0, y0, _, _ = blob.bbox
    xs = np.fromiter((p[0] - x0 for p in blob.pixels), dtype=np.int64)
    ys = np.fromiter((p[1] - y0 for p in blob.pixels), dtype=np.int64)
    return {
        "n": len(xs),
        "x": int(xs.sum()), "y": int(ys.sum()),
        "xx": int((xs * xs).sum()), "xy": int((xs * ys).sum()),
        "yy": int((ys * ys).sum()),
        "xxx": int((xs * xs * xs).sum()), "xxy": int((xs * xs * ys).sum()),
        "xyy": int((xs * ys * ys).sum()), "yyy": int((ys * ys * ys).sum()),
    }


def central_moments(blob: ObjectBlob) -> dict[str, float]:
    """Central moments mu_pq up to order 3 via exact integer numerators."""
    s = _raw_sums(blob)
    a = s["n"]
    mu20 = (a * s["xx"] - s["x"] ** 2) / a
    mu02 = (a * s["yy"] - s["y"] ** 2) / a
    mu11 = (a * s["xy"] - s["x"] * s["y"]) / a
    a2 = a * a
    mu30 = (a2 * s["xxx"] - 3 * a * s["x"] * s["xx"] + 2 * s["x"] ** 3) / a2
    mu03 = (a2 * s["yyy"] - 3 * a * s["y"] * s["yy"] + 2 * s["y"] ** 3) / a2
    mu21 = (
        a2 * s["xxy"] - 2 * a * s["x"] * s["xy"] - a * s["y"] * s["xx"]
        + 2 * s["x"] ** 2 * s["y"]
    ) / a2
    mu12 = (
        a2 * s["xyy"] - 2 * a * s["y"] * s["xy"] - a * s["x"] * s["yy"]
        + 2 * s["y"] ** 2 * s["x"]
    ) / a2
    return {
        "a": float(a), "mu20": mu20, "mu02": mu02, "mu11": mu11,
        "mu30": mu30, "mu03": mu03, "mu21": mu21, "mu12": mu12,
    }


def hu_moments(blob: ObjectBlob) -> tuple[float, ...]:
    """The seven rotation-invariant combinations of normalized moments."""
    m = central_moments(blob)
    a = m["a"]
    n2 = a * a
    n3 = a * a * math.sqrt(a)
    e20, e02, e11 = m["mu20"] / n2, m["mu02"] / n2, m["mu11"] / n2
    e30, e03 = m["mu30"] / n3, m["mu03"] / n3
    e21, e12 = m["mu21"] / n3, m["mu12"] / n3
    h1 = e20 + e02
    h2 = (e20 - e02) ** 2 + 4 * e11**2
    h3 = (e30 - 3 * e12) ** 2 + (3 * e21 - e03) ** 2
    h4 = (e30 + e12) ** 2 + (e21 + e03) ** 2
    h5 = (e30 - 3 * e12) * (e30 + e12) * (
        (e30 + e12) ** 2 - 3 * (e21 + e03) ** 2
    ) + (3 * e21 - e03) * (e21 + e03) * (3 * (e30 + e12) ** 2 - (e21 + e03) ** 2)
    h6 = (e20 - e02) * ((e30 + e12) ** 2 - (e21 + e03) ** 2) + 4 * e11 * (
        e30 + e12
    ) * (e21 + e03)
    h7 = (3 * e21 - e03) * (e30 + e12) * (
        (e30 + e12) ** 2 - 3 * (e21 + e03) ** 2
    ) - (e30 - 3 * e12) * (e21 + e03) * (3 * (e30 + e12) ** 2 - (e21 + e03) ** 2)
    return (h1, h2, h3, h4, h5, h6, h7)


def compress_moment(h: float) -> float:
    """sign(h) * log10(1 + |h| * 1e12) / 12, clamped into [-1, 1].

    Thin elongated blobs can push h1 past 1.0; the clamp saturates those
    rather than letting the component leave its documented range.
    """
    v = math.copysign(math.log10(1.0 + abs(h) * _MOMENT_SCALE) / _MOMENT_DECADES, h)
    return max(-1.0, min(1.0, v))


def eccentricity(mu20: float, mu02: float, mu11: float) -> float:
    common = mu20 + mu02
    diff = mu20 - mu02
    root = math.sqrt(diff * diff + 4.0 * mu11 * mu11)
    lam_max = (common + root) / 2.0
    lam_min = (common - root) / 2.0
    if lam_max <= 0.0:
        return 0.0
    ratio = max(0.0, min(1.0, lam_min / lam_max))
    return math.sqrt(1.0 - ratio)


def extract_features(blob: ObjectBlob) -> tuple[float, ...]:
    """Compute the 12-vector described in the module docstring."""
    _, _, w, h = blob.bbox
    area = blob.area
    p = perimeter(blob)
    f1 = 4.0 * math.pi * area / (p * p)
    f2 = area / (w * h)
    f3 = min(w, h) / max(w, h)
    f4 = area / hull_lattice_count(blob)
    m = central_moments(blob)
    f5 = eccentricity(m["mu20"], m["mu02"], m["mu11"])
    compressed = tuple(compress_moment(x) for x in hu_moments(blob))
    return (f1, f2, f3, f4, f5) + compressed


def skeleton_endpoints(blob: ObjectBlob) -> int:
    """Endpoints (exactly one 8-neighbor) of the blob's thinned skeleton."""
    skel = thin_mask(blob.local_mask())
    p = np.pad(skel, 1).astype(np.int8)
    neighbors = (
        p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
        + p[1:-1, :-2] + p[1:-1, 2:]
        + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    )
    return int((skel & (neighbors == 1)).sum())


def classify_shape(
    fv: tuple[float, ...], blob: ObjectBlob, thresholds: ShapeConfig | None = None
) -> ShapeClass:
    """First matching rule of the ordered decision list; BLOB is the fallback.

    The skeleton-endpoint test for arcs is evaluated lazily since thinning is
    the costly step and most blobs never reach that rule.
    """
    t = thresholds or ShapeConfig()
    f1, f2, f3, f4 = fv[0], fv[1], fv[2], fv[3]
    if f3 < t.line_max_aspect:
        return ShapeClass.LINE
    if f1 > t.circle_min_circularity and f4 > t.circle_min_solidity:
        return ShapeClass.CIRCLE
    if f2 > t.rect_min_extent and f3 > t.square_min_aspect:
        return ShapeClass.SQUARE
    if f2 > t.rect_min_extent:
        return ShapeClass.RECTANGLE
    if f4 > t.triangle_min_solidity and t.triangle_extent_low <= f2 <= t.triangle_extent_high:
        return ShapeClass.TRIANGLE
    if f4 < t.arc_max_solidity and f3 >= t.arc_min_aspect and skeleton_endpoints(blob) == 2:
        return ShapeClass.ARC
    return ShapeClass.BLOB
