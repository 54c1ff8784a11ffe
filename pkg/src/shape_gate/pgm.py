"""PGM (P2/P5) reading and writing, plus an optional PNG path.

PGM is the bit-exact interchange format: 8-bit grayscale, maxval <= 255.
PNG support requires Pillow and the `[io] allow_png` config switch.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ImageFormatError


def _read_tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Pull whitespace-separated header tokens, skipping # comments."""
    tokens: list[bytes] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) PGM into a uint8 (H, W) array."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a PGM file (expected P2 or P5 magic)")
    magic = data[:2]
    (w_tok, h_tok, max_tok), pos = _read_tokens(data, 3, 2)
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad PGM header") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: maxval {maxval} out of 8-bit range")

    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + width * height]
        if len(raster) != width * height:
            raise ImageFormatError(f"{path}: truncated PGM raster")
        img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
        return img.copy()

    values = data[pos:].split()
    if len(values) != width * height:
        raise ImageFormatError(
            f"{path}: expected {width * height} samples, found {len(values)}"
        )
    try:
        flat = np.array([int(v) for v in values], dtype=np.int64)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: non-numeric PGM sample") from exc
    if flat.min() < 0 or flat.max() > maxval:
        raise ImageFormatError(f"{path}: sample out of range 0..{maxval}")
    return flat.astype(np.uint8).reshape(height, width)


def write_pgm(path: str | os.PathLike, img: np.ndarray, binary: bool = True) -> None:
    """Write a uint8 (H, W) array as P5 (default) or P2."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ImageFormatError("PGM writer expects a 2-D array")
    arr = arr.astype(np.uint8, copy=False)
    h, w = arr.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(arr.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode("ascii"))
            lines = (" ".join(str(v) for v in row) for row in arr.tolist())
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


def read_image(path: str | os.PathLike, allow_png: bool = False) -> np.ndarray:
    """Read a scene image; PGM always, PNG only when enabled in config."""
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        if not allow_png:
            raise ImageFormatError(
                f"{path}: PNG input is disabled (set [io] allow_png = true)"
            )
        try:
            from PIL import Image
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise ImageFormatError("PNG support needs the 'pillow' extra") from exc
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    return read_pgm(path)
