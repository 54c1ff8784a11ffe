"""Gated-vs-exhaustive benchmark harness.

Query features are prepared once, outside the clock, so each timed sample
covers exactly the search stage: index lookup, candidate ranking, and member
scanning for the gated arm; a full database scan for the exhaustive arm. The
two arms run interleaved for N repeats after a discarded warmup round, and
medians are reported rather than means. Comparison counts must be identical
across repeats; wall time is the hardware-dependent half of the story.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from statistics import median

from .config import EngineConfig
from .features import ShapeClass, classify_shape, extract_features
from .index import ClusterIndex
from .pgm import read_image
from .pipeline import (
    exhaustive_search,
    gated_search,
    preprocess_scene,
    query_features,
    window_family,
)
from .windows import map_to_window

CSV_HEADER = ("mode", "run", "query", "ns", "comparisons", "outcome")


@dataclass(frozen=True)
class PreparedQuery:
    query_id: int
    scene: str
    blob: int
    shape: ShapeClass
    window_index: int
    features: tuple[float, ...]


@dataclass(frozen=True)
class BenchRow:
    mode: str       # "gated" or "exhaustive"
    run: int        # 1-based, warmup excluded
    query: int
    ns: int
    comparisons: int
    outcome: str


@dataclass(frozen=True)
class ModeSummary:
    total_ns: int             # sum over queries of the median-across-runs time
    total_comparisons: int    # one run's worth (identical across runs)
    median_query_ns: float


@dataclass(frozen=True)
class BenchResult:
    db_members: int
    query_count: int
    repeats: int
    gated: ModeSummary
    exhaustive: ModeSummary
    speedup_time: float
    speedup_comparisons: float
    rows: tuple[BenchRow, ...]


def read_query_list(path: str | Path) -> list[Path]:
    """Scene list file: one image path per line, relative to the list file."""
    p = Path(path)
    lines = [ln.strip() for ln in p.read_text().splitlines() if ln.strip()]
    return [p.parent / ln for ln in lines]


def prepare_queries(
    scene_paths: list[Path], cfg: EngineConfig
) -> list[PreparedQuery]:
    """Run the image pipeline once per blob; benchmarking reuses the vectors."""
    family = window_family(cfg)
    queries = []
    for scene in scene_paths:
        gray = read_image(scene, allow_png=cfg.io.allow_png)
        for i, blob in enumerate(preprocess_scene(gray, cfg)):
            fv_raw = extract_features(blob)
            shape = classify_shape(fv_raw, blob, cfg.shape)
            window = map_to_window(
                blob.bbox[2], blob.bbox[3], family, cfg.scale.extensible
            )
            queries.append(
                PreparedQuery(
                    query_id=len(queries),
                    scene=str(scene),
                    blob=i,
                    shape=shape,
                    window_index=window.index,
                    features=query_features(blob, window.side),
                )
            )
    return queries


def run_bench(
    index: ClusterIndex,
    queries: list[PreparedQuery],
    tau: float,
    slack: int = 0,
    repeats: int = 5,
) -> BenchResult:
    """Interleaved A/B timing of the search stage over all queries."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows: list[BenchRow] = []
    samples: dict[tuple[str, int], list[int]] = {}
    comparisons: dict[tuple[str, int], int] = {}
    outcomes: dict[tuple[str, int], str] = {}

    providers = [(q, (lambda fv=q.features: fv)) for q in queries]

    for run in range(repeats + 1):  # run 0 is the discarded warmup
        for q, provider in providers:
            t0 = time.perf_counter_ns()
            outcome = gated_search(index, q.shape, q.window_index, provider, tau, slack)
            ns = time.perf_counter_ns() - t0
            _record(rows, samples, comparisons, outcomes, "gated", run, q, ns, outcome)
        for q, _provider in providers:
            t0 = time.perf_counter_ns()
            outcome = exhaustive_search(index, q.features, tau)
            ns = time.perf_counter_ns() - t0
            _record(
                rows, samples, comparisons, outcomes, "exhaustive", run, q, ns, outcome
            )

    summaries = {}
    for mode in ("gated", "exhaustive"):
        med = [median(samples[(mode, q.query_id)]) for q in queries]
        total_cmp = sum(comparisons[(mode, q.query_id)] for q in queries)
        summaries[mode] = ModeSummary(
            total_ns=int(sum(med)),
            total_comparisons=total_cmp,
            median_query_ns=float(median(med)) if med else 0.0,
        )
    gated, exhaustive = summaries["gated"], summaries["exhaustive"]
    return BenchResult(
        db_members=index.member_count,
        query_count=len(queries),
        repeats=repeats,
        gated=gated,
        exhaustive=exhaustive,
        speedup_time=(
            exhaustive.total_ns / gated.total_ns if gated.total_ns else 0.0
        ),
        speedup_comparisons=(
            exhaustive.total_comparisons / gated.total_comparisons
            if gated.total_comparisons
            else 0.0
        ),
        rows=tuple(rows),
    )


def _record(rows, samples, comparisons, outcomes, mode, run, query, ns, outcome):
    key = (mode, query.query_id)
    if run == 0:
        # warmup: seed the determinism bookkeeping, keep no timing
        comparisons[key] = outcome.members_compared
        outcomes[key] = outcome.outcome
        samples[key] = []
        return
    if outcome.members_compared != comparisons[key]:
        raise AssertionError(
            f"comparison count changed across repeats for {key}: "
            f"{comparisons[key]} then {outcome.members_compared}"
        )
    samples[key].append(ns)
    rows.append(
        BenchRow(
            mode=mode,
            run=run,
            query=query.query_id,
            ns=ns,
            comparisons=outcome.members_compared,
            outcome=outcome.outcome,
        )
    )


def write_csv(rows: tuple[BenchRow, ...], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [row.mode, row.run, row.query, row.ns, row.comparisons, row.outcome]
            )


def summary_lines(result: BenchResult) -> list[str]:
    g, e = result.gated, result.exhaustive
    return [
        f"db members: {result.db_members}, queries: {result.query_count}, "
        f"repeats: {result.repeats} (plus 1 warmup)",
        f"gated:      total {g.total_ns} ns, comparisons {g.total_comparisons}, "
        f"median/query {g.median_query_ns:.0f} ns",
        f"exhaustive: total {e.total_ns} ns, comparisons {e.total_comparisons}, "
        f"median/query {e.median_query_ns:.0f} ns",
        f"speedup: time x{result.speedup_time:.2f}, "
        f"comparisons x{result.speedup_comparisons:.2f}",
    ]
