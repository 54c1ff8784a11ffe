"""Scene preprocessing: binarize, denoise, segment, thin, normalize.

All functions are pure; images are numpy arrays indexed [y, x] with
foreground = True, and blob pixel coordinates are (x, y) tuples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def otsu_threshold(img: np.ndarray) -> int:
    """Threshold maximizing between-class variance of the 256-bin histogram.

    When several thresholds tie (flat plateaus are common for clean two-level
    images) the midpoint of the tying range is returned. A single-level image
    yields that level itself.
    """
    hist = np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    # class "background" = intensities <= t, foreground = intensities > t
    w0 = np.cumsum(hist)
    sum0 = np.cumsum(hist * levels)
    mean_all = sum0[-1] / total
    w1 = total - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = sum0 / w0
        mu1 = (sum0[-1] - sum0) / w1
    var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between = np.nan_to_num(var_between, nan=0.0)
    best = var_between.max()
    if best == 0.0:
        return int(np.flatnonzero(hist)[0])
    winners = np.flatnonzero(var_between == best)
    _ = mean_all  # kept for clarity of the criterion; not needed further
    return int(round((winners[0] + winners[-1]) / 2.0))


def binarize(img: np.ndarray, method: str = "otsu", threshold: int = 128) -> np.ndarray:
    """Grayscale to foreground mask.

    fixed mode: pixel is foreground iff intensity >= threshold.
    otsu mode: the threshold t is chosen by `otsu_threshold` and foreground is
    intensity > t, so a single-level image comes out all background.
    """
    arr = np.asarray(img, dtype=np.uint8)
    if method == "fixed":
        return arr >= threshold
    if method == "otsu":
        return arr > otsu_threshold(arr)
    raise ValueError(f"unknown binarize method {method!r}")


def denoise_median(img: np.ndarray, radius: int = 1) -> np.ndarray:
    """Binary majority filter over a (2r+1)^2 neighborhood, replicate borders."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    mask = np.asarray(img, dtype=bool)
    side = 2 * radius + 1
    padded = np.pad(mask, radius, mode="edge").astype(np.int32)
    # integral image -> window sums
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = padded.cumsum(0).cumsum(1)
    h, w = mask.shape
    window = (
        integral[side : side + h, side : side + w]
        - integral[:h, side : side + w]
        - integral[side : side + h, :w]
        + integral[:h, :w]
    )
    return window * 2 > side * side


@dataclass(frozen=True)
class ObjectBlob:
    """One 8- (or 4-) connected foreground component.

    pixels are absolute (x, y) coordinates sorted by (y, x); bbox is
    (x0, y0, w, h), the tightest axis-aligned box.
    """

    pixels: tuple[tuple[int, int], ...]
    bbox: tuple[int, int, int, int]
    area: int

    @classmethod
    def from_pixels(cls, pixels) -> "ObjectBlob":
        pts = sorted(((int(x), int(y)) for x, y in pixels), key=lambda p: (p[1], p[0]))
        if not pts:
            raise ValueError("blob needs at least one pixel")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        x0, y0 = min(xs), min(ys)
        bbox = (x0, y0, max(xs) - x0 + 1, max(ys) - y0 + 1)
        return cls(pixels=tuple(pts), bbox=bbox, area=len(pts))

    @classmethod
    def from_mask(cls, mask: np.ndarray, origin: tuple[int, int] = (0, 0)) -> "ObjectBlob":
        ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
        return cls.from_pixels(zip(xs + origin[0], ys + origin[1]))

    def local_mask(self) -> np.ndarray:
        """Boolean (h, w) raster of the blob relative to its bbox corner."""
        x0, y0, w, h = self.bbox
        mask = np.zeros((h, w), dtype=bool)
        for x, y in self.pixels:
            mask[y - y0, x - x0] = True
        return mask


def segment(img: np.ndarray, connectivity: int = 8, min_area: int = 8) -> list[ObjectBlob]:
    """Split the foreground into connected components.

    Components smaller than min_area are dropped as residual speckle. Blobs
    come back in a deterministic order: ascending (y0, x0) of the bounding
    box, ties broken by the first pixel in raster order.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(img, dtype=bool)
    structure = EIGHT_CONNECTED if connectivity == 8 else FOUR_CONNECTED
    labels, _ = ndimage.label(mask, structure=structure)
    blobs = []
    for label_id, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        # find_objects gives the bbox of each label; mask off interlopers
        ys, xs = np.nonzero(labels[sl] == label_id)
        if len(ys) < min_area:
            continue
        blobs.append(
            ObjectBlob.from_pixels(zip(xs + sl[1].start, ys + sl[0].start))
        )
    blobs.sort(key=lambda b: (b.bbox[1], b.bbox[0], b.pixels[0][1], b.pixels[0][0]))
    return blobs


def _zhang_suen_pass(mask: np.ndarray, second: bool) -> np.ndarray:
    """One sub-iteration; returns the deletion mask."""
    p = np.pad(mask, 1).astype(np.uint8)
    p2 = p[:-2, 1:-1]  # N
    p3 = p[:-2, 2:]    # NE
    p4 = p[1:-1, 2:]   # E
    p5 = p[2:, 2:]     # SE
    p6 = p[2:, 1:-1]   # S
    p7 = p[2:, :-2]    # SW
    p8 = p[1:-1, :-2]  # W
    p9 = p[:-2, :-2]   # NW
    ring = [p2, p3, p4, p5, p6, p7, p8, p9]
    b = sum(ring)
    a = sum((ring[i] == 0) & (ring[(i + 1) % 8] == 1) for i in range(8))
    if not second:
        cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    return mask & (b >= 2) & (b <= 6) & (a == 1) & cond


def thin_mask(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen two-subiteration thinning to a fixed point."""
    out = np.asarray(mask, dtype=bool).copy()
    while True:
        changed = False
        for second in (False, True):
            deletions = _zhang_suen_pass(out, second)
            if deletions.any():
                out &= ~deletions
                changed = True
        if not changed:
            return out


def thin(blob: ObjectBlob) -> ObjectBlob:
    """Morphological skeleton of a blob; idempotent by construction."""
    x0, y0, _, _ = blob.bbox
    return ObjectBlob.from_mask(thin_mask(blob.local_mask()), origin=(x0, y0))


def normalize(blob: ObjectBlob, side: int) -> np.ndarray:
    """Rescale a blob into a side x side window.

    Nearest-neighbor resampling; the longer bbox side maps to the window side
    exactly, the shorter axis keeps its aspect and is centered. At least one
    foreground pixel always survives.
    """
    if side < 1:
        raise ValueError("window side must be >= 1")
    mask = blob.local_mask()
    h, w = mask.shape
    if w >= h:
        dst_w = side
        dst_h = max(1, round(h * side / w))
    else:
        dst_h = side
        dst_w = max(1, round(w * side / h))
    src_x = np.minimum((np.arange(dst_w) + 0.5) * w / dst_w, w - 1).astype(int)
    src_y = np.minimum((np.arange(dst_h) + 0.5) * h / dst_h, h - 1).astype(int)
    scaled = mask[np.ix_(src_y, src_x)]
    if not scaled.any():
        # dense grids can miss a sparse blob entirely; keep its centroid pixel
        ys, xs = np.nonzero(mask)
        cx = int(round(xs.mean() * (dst_w - 1) / max(w - 1, 1)))
        cy = int(round(ys.mean() * (dst_h - 1) / max(h - 1, 1)))
        scaled[cy, cx] = True
    out = np.zeros((side, side), dtype=bool)
    y_off = (side - dst_h) // 2
    x_off = (side - dst_w) // 2
    out[y_off : y_off + dst_h, x_off : x_off + dst_w] = scaled
    return out
