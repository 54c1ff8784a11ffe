"""Synthetic scene generator: rasterized primitive shapes plus manifests.

Stands in for an external shape corpus so tests and benchmarks are fully
reproducible: every scene is a single randomized shape painted bright on a
dark canvas, optionally peppered with salt-and-pepper noise, written as PGM
with a sidecar manifest. Generation is deterministic per seed.

Geometry ranges are chosen so each class lands inside its decision-list rule
with margin: rectangles and squares keep near-axis orientations (a strongly
rotated rectangle genuinely stops looking like one to the extent/aspect
rules), lines stay thin relative to length, triangles keep their apex over
the base so extent sits near 0.5, and stars are spiky enough to read as
generic blobs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import ShapeClass
from .pgm import write_pgm

BG_LEVEL = 30
FG_LEVEL = 220

ALL_CLASSES = (
    ShapeClass.LINE,
    ShapeClass.SQUARE,
    ShapeClass.RECTANGLE,
    ShapeClass.CIRCLE,
    ShapeClass.TRIANGLE,
    ShapeClass.ARC,
    ShapeClass.BLOB,
)

# the five classes used for the window-uniform benchmark database
BENCH_CLASSES = ALL_CLASSES[:5]


def _grid(half: int) -> tuple[np.ndarray, np.ndarray]:
    coords = np.arange(-half, half + 1, dtype=np.float64)
    return np.meshgrid(coords, coords)


def _crop(mask: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(mask)
    return mask[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]


def _rotated_box(length: float, thickness: float, theta: float) -> np.ndarray:
    half = int(math.ceil((length + thickness) / 2)) + 2
    xx, yy = _grid(half)
    c, s = math.cos(theta), math.sin(theta)
    u = xx * c + yy * s
    v = -xx * s + yy * c
    return _crop((np.abs(u) <= length / 2) & (np.abs(v) <= thickness / 2))


def _axis_jitter(rng: np.random.Generator, degrees: float) -> float:
    """Small rotation around a random multiple of 90 degrees."""
    quarter = rng.integers(0, 4) * math.pi / 2
    return quarter + math.radians(rng.uniform(-degrees, degrees))


def raster_line(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    # full-size strokes are 3 px thick so a radius-1 majority filter cannot
    # sever them; window-fitted (scaled) strokes drop to 2 px to stay short
    thickness = 3.0 if scale >= 1.0 else 2.0
    floor = 13.0 * thickness
    length = max(rng.uniform(floor, 78.0) * scale, floor)
    return _rotated_box(length, thickness, _axis_jitter(rng, 2.5))


def raster_square(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    side = max(rng.uniform(18.0, 58.0) * scale, 15.0)
    return _rotated_box(side, side, _axis_jitter(rng, 1.5))


def raster_rectangle(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    width = max(rng.uniform(28.0, 70.0) * scale, 22.0)
    height = width * rng.uniform(0.40, 0.72)
    return _rotated_box(width, max(height, 9.0), _axis_jitter(rng, 1.5))


def raster_circle(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    radius = rng.uniform(9.0, 30.0) * scale
    half = int(math.ceil(radius)) + 2
    xx, yy = _grid(half)
    return _crop(xx * xx + yy * yy <= radius * radius)


def raster_triangle(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    base = max(rng.uniform(28.0, 64.0) * scale, 20.0)
    height = base * rng.uniform(0.45, 0.95)
    apex_x = base * rng.uniform(0.25, 0.75) - base / 2
    theta = _axis_jitter(rng, 3.0)
    verts = [(-base / 2, height / 2), (base / 2, height / 2), (apex_x, -height / 2)]
    c, s = math.cos(theta), math.sin(theta)
    rotated = [(x * c - y * s, x * s + y * c) for x, y in verts]
    half = int(math.ceil(max(max(abs(x), abs(y)) for x, y in rotated))) + 2
    xx, yy = _grid(half)
    inside = np.ones_like(xx, dtype=bool)
    for j in range(3):
        ax, ay = rotated[j]
        bx, by = rotated[(j + 1) % 3]
        cross = (bx - ax) * (yy - ay) - (by - ay) * (xx - ax)
        # vertex order may be either handedness after rotation
        inside &= cross <= 0 if _signed_area(rotated) < 0 else cross >= 0
    return _crop(inside)


def _signed_area(verts) -> float:
    total = 0.0
    for j, (ax, ay) in enumerate(verts):
        bx, by = verts[(j + 1) % len(verts)]
        total += ax * by - bx * ay
    return total / 2.0


def raster_arc(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    radius = rng.uniform(15.0, 34.0) * scale
    radius = max(radius, 10.0)
    thickness = rng.uniform(2.2, 3.6)
    span = math.radians(rng.uniform(150.0, 300.0))
    start = rng.uniform(0.0, 2.0 * math.pi)
    half = int(math.ceil(radius)) + 2
    xx, yy = _grid(half)
    rr = np.sqrt(xx * xx + yy * yy)
    ring = (rr >= radius - thickness) & (rr <= radius)
    angle = np.arctan2(yy, xx)
    mid = start + span / 2.0
    delta = np.mod(angle - mid + math.pi, 2.0 * math.pi) - math.pi
    return _crop(ring & (np.abs(delta) <= span / 2.0))


def raster_blob(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    arms = int(rng.integers(5, 10))
    outer = rng.uniform(18.0, 38.0) * scale
    outer = max(outer, 12.0)
    inner = outer * rng.uniform(0.45, 0.60)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    verts = []
    for j in range(2 * arms):
        radius = outer if j % 2 == 0 else inner
        angle = phase + j * math.pi / arms + rng.uniform(-0.25, 0.25) * math.pi / arms
        verts.append((radius * math.cos(angle), radius * math.sin(angle)))
    half = int(math.ceil(outer)) + 2
    xx, yy = _grid(half)
    inside = np.zeros_like(xx, dtype=bool)
    n = len(verts)
    for j in range(n):  # even-odd ray casting against a horizontal ray
        ax, ay = verts[j]
        bx, by = verts[(j + 1) % n]
        crosses = (ay > yy) != (by > yy)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = ax + (yy - ay) * (bx - ax) / (by - ay)
        inside ^= crosses & (xx < np.where(crosses, x_at, np.inf))
    return _crop(inside)


_RASTERIZERS = {
    ShapeClass.LINE: raster_line,
    ShapeClass.SQUARE: raster_square,
    ShapeClass.RECTANGLE: raster_rectangle,
    ShapeClass.CIRCLE: raster_circle,
    ShapeClass.TRIANGLE: raster_triangle,
    ShapeClass.ARC: raster_arc,
    ShapeClass.BLOB: raster_blob,
}


def generate_shape(
    shape: ShapeClass,
    rng: np.random.Generator,
    max_side: int | None = None,
) -> np.ndarray:
    """Boolean mask of one randomized shape, tightly cropped.

    With max_side set, the shape is redrawn (scaled down on retries) until its
    longer bbox side fits in (max_side/2, max_side]; that is how the
    window-uniform benchmark corpus keeps every object in one scale window.
    """
    raster = _RASTERIZERS[shape]
    if max_side is None:
        return raster(rng)
    scale = 1.0
    for _ in range(64):
        mask = raster(rng, scale)
        longest = max(mask.shape)
        if max_side // 2 < longest <= max_side:
            return mask
        scale = min(1.0, scale * 0.8) if longest > max_side else min(scale * 1.2, 4.0)
    raise RuntimeError(f"could not fit a {shape.name} into side {max_side}")


def add_salt_pepper(
    img: np.ndarray, rng: np.random.Generator, rate: float
) -> np.ndarray:
    noisy = img.copy()
    hits = rng.random(img.shape) < rate
    salt = rng.random(img.shape) < 0.5
    noisy[hits & salt] = 255
    noisy[hits & ~salt] = 0
    return noisy


@dataclass(frozen=True)
class CorpusSummary:
    out_dir: Path
    scene_paths: tuple[Path, ...]
    manifest_paths: tuple[Path, ...]
    labels: tuple[str, ...]


def gen_corpus(
    out_dir: str | Path,
    seed: int,
    per_class: int,
    classes: tuple[ShapeClass, ...] = ALL_CLASSES,
    noise_rate: float = 0.0,
    window_side: int | None = None,
) -> CorpusSummary:
    """Write `per_class` scenes per shape class, plus manifests and listings.

    Each scene holds a single labeled shape at a random position. Two listing
    files are also written: scenes.txt (image paths) and manifests.txt.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    scene_paths: list[Path] = []
    manifest_paths: list[Path] = []
    labels: list[str] = []
    for shape in classes:
        name = shape.name.lower()
        for i in range(per_class):
            mask = generate_shape(shape, rng, max_side=window_side)
            h, w = mask.shape
            pad_y = 10 + int(rng.integers(0, 13))
            pad_x = 10 + int(rng.integers(0, 13))
            off_y = int(rng.integers(4, pad_y + 1))
            off_x = int(rng.integers(4, pad_x + 1))
            canvas = np.full((h + pad_y + 10, w + pad_x + 10), BG_LEVEL, dtype=np.uint8)
            canvas[off_y : off_y + h, off_x : off_x + w][mask] = FG_LEVEL
            if noise_rate > 0:
                canvas = add_salt_pepper(canvas, rng, noise_rate)
            label = f"{name}-{i:03d}"
            stem = f"{name}_{i:03d}"
            scene = out / f"{stem}.pgm"
            manifest = out / f"{stem}.txt"
            write_pgm(scene, canvas)
            manifest.write_text(f"{scene.name}\n{label}\n")
            scene_paths.append(scene)
            manifest_paths.append(manifest)
            labels.append(label)
    (out / "scenes.txt").write_text("".join(f"{p.name}\n" for p in scene_paths))
    (out / "manifests.txt").write_text("".join(f"{p.name}\n" for p in manifest_paths))
    return CorpusSummary(
        out_dir=out,
        scene_paths=tuple(scene_paths),
        manifest_paths=tuple(manifest_paths),
        labels=tuple(labels),
    )
