import math

import numpy as np
import pytest

from shape_gate.preprocess import ObjectBlob


def solid_rect(w, h, x0=0, y0=0):
    return ObjectBlob.from_pixels(
        [(x0 + x, y0 + y) for x in range(w) for y in range(h)]
    )


def disk(radius, cx=0, cy=0):
    r = int(math.ceil(radius))
    return ObjectBlob.from_pixels(
        [
            (cx + x, cy + y)
            for x in range(-r, r + 1)
            for y in range(-r, r + 1)
            if x * x + y * y <= radius * radius
        ]
    )


def mask_of(blob):
    return blob.local_mask()


@pytest.fixture
def rng():
    return np.random.default_rng(42)
