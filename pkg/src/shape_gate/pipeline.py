"""Training and detection orchestration.

Training: clean the scene once, segment, then per blob classify shape, map the
scale window, normalize, extract features, and file the vector into the
cluster index. Detection mirrors it, but consults the index right after the
shape/window step: when no cluster exists for that key, the blob is declared a
new object immediately and the normalization / keypoint stages never run.
The exhaustive variant ignores the index structure and scans every cluster,
providing the baseline arm for the benchmark.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import dog as dogmod
from .config import EngineConfig
from .errors import ManifestError
from .features import ShapeClass, classify_shape, extract_features
from .index import ClusterIndex, distance, nearest_member, rank_by_mean
from .pgm import read_image
from .preprocess import ObjectBlob, binarize, denoise_median, normalize, segment
from .windows import ScaleWindow, generate_windows, map_to_window

NO_SHAPE_CLUSTER = "no_shape_cluster"
NO_SCALE_CLUSTER = "no_scale_cluster"
DISTANCE_EXCEEDS_TAU = "distance_exceeds_tau"


@dataclass
class StageCounters:
    """Execution counts proving which stages ran (early-rejection evidence)."""

    scenes: int = 0
    blobs: int = 0
    classifications: int = 0
    normalizations: int = 0
    keypoint_runs: int = 0


@dataclass(frozen=True)
class TrainRow:
    label: str
    shape: ShapeClass
    window_index: int
    window_side: int
    cluster_id: int
    created_new_cluster: bool


@dataclass(frozen=True)
class TrainReport:
    scene: str
    rows: tuple[TrainRow, ...]

    @property
    def blobs_found(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class DetectionResult:
    blob: int
    outcome: str                      # "detected" or "new_object"
    label: str | None
    distance: float | None
    reason: str | None
    shape: ShapeClass
    window_index: int
    window_side: int
    clusters_visited: int
    members_compared: int
    elapsed_ns: int
    keypoint_stats: tuple[float, float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "blob": self.blob,
            "outcome": self.outcome,
            "label": self.label,
            "distance": self.distance,
            "reason": self.reason,
            "shape": self.shape.name,
            "window": self.window_index,
            "window_side": self.window_side,
            "clusters_visited": self.clusters_visited,
            "members_compared": self.members_compared,
            "elapsed": self.elapsed_ns,
            "keypoint_stats": list(self.keypoint_stats)
            if self.keypoint_stats is not None
            else None,
        }


@dataclass(frozen=True)
class SearchOutcome:
    outcome: str
    label: str | None
    distance: float | None
    reason: str | None
    clusters_visited: int
    members_compared: int


def window_family(cfg: EngineConfig) -> tuple[ScaleWindow, ...]:
    return generate_windows(cfg.scale.base, cfg.scale.count)


def preprocess_scene(gray: np.ndarray, cfg: EngineConfig) -> list[ObjectBlob]:
    """Binarize, denoise, segment: the shared front of both pipelines."""
    pre = cfg.preprocess
    mask = binarize(gray, method=pre.binarize, threshold=pre.fixed_threshold)
    if pre.median_radius > 0:
        mask = denoise_median(mask, radius=pre.median_radius)
    return segment(mask, connectivity=pre.connectivity, min_area=pre.min_area)


def query_features(blob: ObjectBlob, side: int) -> tuple[float, ...]:
    """Feature vector of the blob after normalization into its window."""
    norm = normalize(blob, side)
    return extract_features(ObjectBlob.from_mask(norm))


def blob_keypoint_stats(
    gray: np.ndarray, blob: ObjectBlob, cfg: EngineConfig
) -> tuple[float, float, float]:
    """Keypoint statistics of the blob's bounding-box region of the scene."""
    x0, y0, w, h = blob.bbox
    region = np.asarray(gray, dtype=np.float64)[y0 : y0 + h, x0 : x0 + w] / 255.0
    params = dogmod.ScaleSpaceParams(
        octaves=cfg.dog.octaves, scales=cfg.dog.scales, sigma0=cfg.dog.sigma0
    )
    stack = dogmod.build_dog(dogmod.build_scale_space(region, params))
    keypoints = dogmod.detect_extrema(stack, cfg.dog.contrast_threshold)
    return dogmod.keypoint_stats(keypoints)


def load_manifest(path: str | Path) -> tuple[Path, list[str]]:
    """Scene manifest: first line names the image (relative to the manifest),
    remaining lines are labels in blob order."""
    p = Path(path)
    try:
        lines = [ln.strip() for ln in p.read_text().splitlines()]
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {p}: {exc}") from exc
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ManifestError(f"manifest {p} is empty")
    return p.parent / lines[0], lines[1:]


def train_scene(
    gray: np.ndarray,
    labels: list[str],
    index: ClusterIndex,
    cfg: EngineConfig,
    scene_id: str = "scene",
    counters: StageCounters | None = None,
) -> TrainReport:
    """Run the training pipeline for one scene.

    The label list must match the segmented blob count exactly; on mismatch
    nothing is inserted.
    """
    counters = counters if counters is not None else StageCounters()
    blobs = preprocess_scene(gray, cfg)
    if len(labels) != len(blobs):
        raise ManifestError(
            f"{scene_id}: {len(labels)} labels for {len(blobs)} segmented blobs"
        )
    counters.scenes += 1
    family = window_family(cfg)
    rows = []
    for i, (blob, label) in enumerate(zip(blobs, labels)):
        counters.blobs += 1
        fv_raw = extract_features(blob)
        shape = classify_shape(fv_raw, blob, cfg.shape)
        counters.classifications += 1
        window = map_to_window(blob.bbox[2], blob.bbox[3], family, cfg.scale.extensible)
        fv = query_features(blob, window.side)
        counters.normalizations += 1
        if cfg.dog.append_stats_to_features:
            fv = fv + blob_keypoint_stats(gray, blob, cfg)
            counters.keypoint_runs += 1
        cid, created = index.insert(
            label, shape, window.index, window.side, fv, source=f"{scene_id}#blob{i}"
        )
        rows.append(TrainRow(label, shape, window.index, window.side, cid, created))
    return TrainReport(scene=scene_id, rows=tuple(rows))


def train_manifest(
    manifest_path: str | Path, index: ClusterIndex, cfg: EngineConfig
) -> TrainReport:
    image_path, labels = load_manifest(manifest_path)
    gray = read_image(image_path, allow_png=cfg.io.allow_png)
    return train_scene(gray, labels, index, cfg, scene_id=str(manifest_path))


def gated_search(
    index: ClusterIndex,
    shape: ShapeClass,
    window_index: int,
    features_fn: Callable[[], tuple[float, ...]],
    tau: float,
    slack: int = 0,
    exact_min: bool = False,
    centroid_only: bool = False,
) -> SearchOutcome:
    """Index-first search.

    The feature provider is only invoked once the (shape, window) key has
    matched a cluster; a rejected query therefore reports zero member
    comparisons without any feature work having happened.
    """
    candidates = index.candidate_clusters(shape, window_index, slack)
    if not candidates:
        reason = NO_SCALE_CLUSTER if index.has_shape(shape) else NO_SHAPE_CLUSTER
        return SearchOutcome("new_object", None, None, reason, 0, 0)
    features = features_fn()
    ranked = rank_by_mean([index.clusters[cid] for cid in candidates], features)

    if centroid_only:
        # alternate reading of the matching rule: the mean itself decides
        best = ranked[0]
        mean_dist = distance(best.mean, features)
        if mean_dist <= tau:
            return SearchOutcome(
                "detected", _majority_label(best), mean_dist, None, len(ranked), 0
            )
        return SearchOutcome(
            "new_object", None, None, DISTANCE_EXCEEDS_TAU, len(ranked), 0
        )

    visited = 0
    compared = 0
    best_label: str | None = None
    best_dist: float | None = None
    for cluster in ranked:
        visited += 1
        label, dist = nearest_member(cluster, features)
        compared += cluster.count
        if best_dist is None or dist < best_dist:
            best_label, best_dist = label, dist
        if not exact_min and dist <= tau:
            break
    if best_dist is not None and best_dist <= tau:
        return SearchOutcome("detected", best_label, best_dist, None, visited, compared)
    return SearchOutcome(
        "new_object", None, None, DISTANCE_EXCEEDS_TAU, visited, compared
    )


def exhaustive_search(
    index: ClusterIndex, features: tuple[float, ...], tau: float
) -> SearchOutcome:
    """Baseline: scan every member of every cluster, no gating, no early exit."""
    best_label: str | None = None
    best_dist: float | None = None
    visited = 0
    compared = 0
    for cid in sorted(index.clusters):
        cluster = index.clusters[cid]
        visited += 1
        label, dist = nearest_member(cluster, features)
        compared += cluster.count
        if best_dist is None or dist < best_dist:
            best_label, best_dist = label, dist
    if best_dist is not None and best_dist <= tau:
        return SearchOutcome("detected", best_label, best_dist, None, visited, compared)
    reason = DISTANCE_EXCEEDS_TAU if visited else NO_SHAPE_CLUSTER
    return SearchOutcome("new_object", None, None, reason, visited, compared)


def _majority_label(cluster) -> str:
    counts: dict[str, int] = {}
    for member in cluster.members:
        counts[member.label] = counts.get(member.label, 0) + 1
    best = cluster.members[0].label
    for label, n in counts.items():  # insertion order breaks ties by first seen
        if n > counts[best]:
            best = label
    return best


def _detect_blob(
    gray: np.ndarray,
    blob: ObjectBlob,
    ordinal: int,
    index: ClusterIndex,
    cfg: EngineConfig,
    tau: float,
    slack: int,
    exhaustive: bool,
    family,
) -> tuple[DetectionResult, StageCounters]:
    """One blob through the testing pipeline; returns its own stage counts so
    the caller can merge them regardless of execution order."""
    delta = StageCounters(blobs=1)
    scratch: dict[str, tuple[float, float, float]] = {}
    t0 = time.perf_counter_ns()
    fv_raw = extract_features(blob)
    shape = classify_shape(fv_raw, blob, cfg.shape)
    delta.classifications += 1
    window = map_to_window(blob.bbox[2], blob.bbox[3], family, cfg.scale.extensible)

    def query_vector() -> tuple[float, ...]:
        fv = query_features(blob, window.side)
        delta.normalizations += 1
        if cfg.detect.keypoints or cfg.dog.append_stats_to_features:
            scratch["stats"] = blob_keypoint_stats(gray, blob, cfg)
            delta.keypoint_runs += 1
        if cfg.dog.append_stats_to_features:
            fv = fv + scratch["stats"]
        return fv

    if exhaustive:
        outcome = exhaustive_search(index, query_vector(), tau)
    else:
        outcome = gated_search(
            index, shape, window.index, query_vector, tau, slack,
            exact_min=cfg.detect.exact_min,
            centroid_only=cfg.detect.centroid_only,
        )
    elapsed = time.perf_counter_ns() - t0
    result = DetectionResult(
        blob=ordinal,
        outcome=outcome.outcome,
        label=outcome.label,
        distance=outcome.distance,
        reason=outcome.reason,
        shape=shape,
        window_index=window.index,
        window_side=window.side,
        clusters_visited=outcome.clusters_visited,
        members_compared=outcome.members_compared,
        elapsed_ns=elapsed,
        keypoint_stats=scratch.get("stats") if cfg.detect.keypoints else None,
    )
    return result, delta


def detect_scene(
    gray: np.ndarray,
    index: ClusterIndex,
    cfg: EngineConfig,
    tau: float | None = None,
    slack: int | None = None,
    exhaustive: bool = False,
    counters: StageCounters | None = None,
    threads: int = 1,
) -> list[DetectionResult]:
    """Run the testing pipeline for one scene, one result per blob.

    Gated mode consults the index right after the shape/window step and skips
    normalization and keypoint work for rejected blobs. Exhaustive mode does
    the identical per-blob feature extraction but scans the whole database.
    With threads > 1, blobs run concurrently against the read-only index;
    results and counters are independent of the schedule (timing aside).
    """
    tau = cfg.detect.tau if tau is None else tau
    slack = cfg.detect.slack if slack is None else slack
    counters = counters if counters is not None else StageCounters()
    counters.scenes += 1
    family = window_family(cfg)
    blobs = preprocess_scene(gray, cfg)

    def work(item):
        i, blob = item
        return _detect_blob(gray, blob, i, index, cfg, tau, slack, exhaustive, family)

    if threads > 1 and len(blobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(work, enumerate(blobs)))
    else:
        pairs = [work(item) for item in enumerate(blobs)]

    results = []
    for result, delta in pairs:
        results.append(result)
        counters.blobs += delta.blobs
        counters.classifications += delta.classifications
        counters.normalizations += delta.normalizations
        counters.keypoint_runs += delta.keypoint_runs
    return results
