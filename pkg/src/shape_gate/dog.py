"""Gaussian scale space, difference-of-Gaussian stack, and extrema keypoints.

Kernel contract: sampled 1-D Gaussian truncated at radius ceil(3*sigma),
renormalized to sum 1, applied separably with replicate borders. Each octave
level is blurred in one shot from the octave base image, so the stack
difference L(k*sigma) - L(sigma) and the two separate blurs of the base agree
to rounding error by construction. Octaves are seeded by taking every second
pixel of the level with twice the base blur.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_OCTAVE_SIDE = 8


@dataclass(frozen=True)
class ScaleSpaceParams:
    octaves: int = 4
    scales: int = 2              # sampled intervals per octave
    sigma0: float = 1.6

    @property
    def k(self) -> float:
        return 2.0 ** (1.0 / self.scales)

    @property
    def levels_per_octave(self) -> int:
        return self.scales + 3


@dataclass
class ScaleSpace:
    params: ScaleSpaceParams
    octaves: list[list[np.ndarray]] = field(default_factory=list)

    def level_sigma(self, octave: int, level: int) -> float:
        """Blur of a level in original-image pixel units."""
        return self.params.sigma0 * self.params.k**level * 2.0**octave


@dataclass
class DogStack:
    params: ScaleSpaceParams
    octaves: list[list[np.ndarray]] = field(default_factory=list)


@dataclass(frozen=True)
class Keypoint:
    x: int                # original-image coordinates
    y: int
    octave: int
    scale_index: int      # DoG level within the octave
    sigma: float
    response: float
    polarity: str         # "max" or "min"


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable truncated-Gaussian blur; sigma 0 returns the input copy."""
    arr = np.asarray(img, dtype=np.float64)
    if sigma == 0:
        return arr.copy()
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    kernel = gaussian_kernel(sigma)
    radius = (len(kernel) - 1) // 2
    out = arr
    for axis in (0, 1):
        pad = [(radius, radius) if a == axis else (0, 0) for a in (0, 1)]
        padded = np.pad(out, pad, mode="edge")
        acc = np.zeros_like(arr)
        for i, weight in enumerate(kernel):
            if axis == 0:
                acc += weight * padded[i : i + arr.shape[0], :]
            else:
                acc += weight * padded[:, i : i + arr.shape[1]]
        out = acc
    return out


def build_scale_space(img: np.ndarray, params: ScaleSpaceParams) -> ScaleSpace:
    """Gaussian pyramid: s+3 levels per octave, factor-2 downsampling between.

    Levels of octave o have nominal blur sigma0 * k^i relative to the octave
    base; the next base is level s (blur 2*sigma0) sampled at every second
    pixel. Octaves smaller than 8 pixels on a side are dropped, but octave 0
    is always built.
    """
    base = np.asarray(img, dtype=np.float64)
    space = ScaleSpace(params=params)
    for _octave in range(params.octaves):
        levels = [
            gaussian_blur(base, params.sigma0 * params.k**i)
            for i in range(params.levels_per_octave)
        ]
        space.octaves.append(levels)
        base = levels[params.scales][::2, ::2]
        if min(base.shape) < MIN_OCTAVE_SIDE:
            break
    return space


def build_dog(space: ScaleSpace) -> DogStack:
    """Adjacent-level differences: D[i] = L[i+1] - L[i], per octave."""
    stack = DogStack(params=space.params)
    for levels in space.octaves:
        stack.octaves.append(
            [levels[i + 1] - levels[i] for i in range(len(levels) - 1)]
        )
    return stack


def two_path_difference(
    base: np.ndarray, params: ScaleSpaceParams, level: int
) -> np.ndarray:
    """The D image computed the other way: two blurs of the base, subtracted."""
    lo = gaussian_blur(base, params.sigma0 * params.k**level)
    hi = gaussian_blur(base, params.sigma0 * params.k ** (level + 1))
    return hi - lo


def detect_extrema(stack: DogStack, contrast_threshold: float = 0.015) -> list[Keypoint]:
    """Scale-space extrema: strictly above or below all 26 neighbors.

    Border pixels and the outermost DoG levels are excluded; responses below
    the contrast threshold are discarded; coordinates are mapped back to the
    original resolution by the octave's power of two.
    """
    found: list[Keypoint] = []
    k = stack.params.k
    sigma0 = stack.params.sigma0
    for octave, levels in enumerate(stack.octaves):
        if len(levels) < 3:
            continue
        cube = np.stack(levels)           # (L, H, W)
        L, H, W = cube.shape
        if H < 3 or W < 3:
            continue
        center = cube[1 : L - 1, 1 : H - 1, 1 : W - 1]
        neighbor_max = np.full_like(center, -np.inf)
        neighbor_min = np.full_like(center, np.inf)
        for dl in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dl == dy == dx == 0:
                        continue
                    view = cube[
                        1 + dl : L - 1 + dl, 1 + dy : H - 1 + dy, 1 + dx : W - 1 + dx
                    ]
                    np.maximum(neighbor_max, view, out=neighbor_max)
                    np.minimum(neighbor_min, view, out=neighbor_min)
        strong = np.abs(center) >= contrast_threshold
        is_max = (center > neighbor_max) & strong
        is_min = (center < neighbor_min) & strong
        scale = 2**octave
        for polarity, hits in (("max", is_max), ("min", is_min)):
            for level_i, yy, xx in zip(*np.nonzero(hits)):
                level = int(level_i) + 1
                found.append(
                    Keypoint(
                        x=(int(xx) + 1) * scale,
                        y=(int(yy) + 1) * scale,
                        octave=octave,
                        scale_index=level,
                        sigma=sigma0 * k**level * scale,
                        response=float(center[level_i, yy, xx]),
                        polarity=polarity,
                    )
                )
    found.sort(key=lambda p: (p.octave, p.scale_index, p.y, p.x, p.polarity))
    return found


def keypoint_stats(keypoints: list[Keypoint]) -> tuple[float, float, float]:
    """(count, mean sigma, mean |response|); zeros when nothing was found."""
    if not keypoints:
        return (0.0, 0.0, 0.0)
    n = float(len(keypoints))
    mean_sigma = sum(p.sigma for p in keypoints) / n
    mean_resp = sum(abs(p.response) for p in keypoints) / n
    return (n, mean_sigma, mean_resp)
