"""Engine configuration: one TOML file, dataclass sections, config fingerprint.

The fingerprint covers everything that changes the meaning of stored feature
vectors and cluster keys (classifier thresholds, scale window family, feature
layout), so a database is never queried under a mismatched configuration.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import ConfigError

ENV_CONFIG = "SHAPE_GATE_CONFIG"
DEFAULT_CONFIG_NAME = "shape-gate.toml"


@dataclass
class PreprocessConfig:
    binarize: str = "otsu"          # "otsu" or "fixed"
    fixed_threshold: int = 128
    median_radius: int = 1          # 0 disables denoising
    connectivity: int = 8
    min_area: int = 8


@dataclass
class ShapeConfig:
    """Decision-list thresholds for the shape classifier, in rule order."""

    line_max_aspect: float = 0.15
    circle_min_circularity: float = 0.82
    circle_min_solidity: float = 0.90
    rect_min_extent: float = 0.85
    square_min_aspect: float = 0.90
    triangle_min_solidity: float = 0.85
    triangle_extent_low: float = 0.40
    triangle_extent_high: float = 0.60
    arc_max_solidity: float = 0.50
    arc_min_aspect: float = 0.15


@dataclass
class ScaleConfig:
    base: int = 4
    count: int = 5
    extensible: bool = True


@dataclass
class DogConfig:
    octaves: int = 4
    scales: int = 2
    sigma0: float = 1.6
    contrast_threshold: float = 0.015
    append_stats_to_features: bool = False


@dataclass
class DetectConfig:
    tau: float = 0.25
    slack: int = 0
    exact_min: bool = False
    centroid_only: bool = False
    keypoints: bool = True          # compute per-blob keypoint stats in reports


@dataclass
class IoConfig:
    allow_png: bool = False


@dataclass
class EngineConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    shape: ShapeConfig = field(default_factory=ShapeConfig)
    scale: ScaleConfig = field(default_factory=ScaleConfig)
    dog: DogConfig = field(default_factory=DogConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def fingerprint(self) -> str:
        """Hash of the settings a stored database depends on."""
        material = {
            "shape": asdict(self.shape),
            "scale": asdict(self.scale),
            # feature layout changes when keypoint stats are appended
            "feature_dims": 15 if self.dog.append_stats_to_features else 12,
        }
        blob = json.dumps(material, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()


_SECTIONS = {
    "preprocess": PreprocessConfig,
    "shape": ShapeConfig,
    "scale": ScaleConfig,
    "dog": DogConfig,
    "detect": DetectConfig,
    "io": IoConfig,
}


def _apply_section(obj, name: str, values: dict):
    known = {f.name: f.type for f in fields(obj)}
    for key, val in values.items():
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key}")
        setattr(obj, key, val)


def load_config(path: str | os.PathLike | None = None) -> EngineConfig:
    """Build the config from defaults, overlaying a TOML file if one is found.

    Resolution order for the file: explicit `path` argument, the
    SHAPE_GATE_CONFIG environment variable, then ./shape-gate.toml if present.
    No file at all is fine; defaults apply.
    """
    cfg = EngineConfig()
    chosen: Path | None = None
    if path is not None:
        chosen = Path(path)
        if not chosen.is_file():
            raise ConfigError(f"config file not found: {chosen}")
    elif os.environ.get(ENV_CONFIG):
        chosen = Path(os.environ[ENV_CONFIG])
        if not chosen.is_file():
            raise ConfigError(f"config file not found (from {ENV_CONFIG}): {chosen}")
    elif Path(DEFAULT_CONFIG_NAME).is_file():
        chosen = Path(DEFAULT_CONFIG_NAME)

    if chosen is None:
        return cfg

    try:
        with open(chosen, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {chosen}: {exc}") from exc

    for section, values in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"section [{section}] must be a table")
        _apply_section(getattr(cfg, section), section, values)
    return cfg
