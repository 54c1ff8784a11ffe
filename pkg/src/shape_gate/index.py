"""Shape x scale cluster store with running means and the global lookup maps.

Every cluster is keyed by (shape class, window index); the index maintains two
cross-consistent maps: by_key for exact lookups and by_shape listing which
windows exist per shape. Training only ever appends. Persistence is a single
versioned, checksummed JSON document with full round-trip float precision.

Concurrency contract: many readers or one writer. `insert` and `save` need
exclusive access; lookups and nearest-member scans are safe between writes.
The member-comparison counter is an atomic integer.
"""
from __future__ import annotations

import json
import math
import os
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DbCorruptionError, DbVersionError
from .features import ShapeClass

DB_VERSION = 1

FeatureVec = tuple[float, ...]
ClusterKey = tuple[int, int]  # (shape code, window index)


class ComparisonCounter:
    """Thread-safe tally of member comparisons (benchmark instrumentation)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._value = 0

    def add(self, n: int) -> None:
        with self._lock:
            self._value += n

    def reset(self) -> None:
        with self._lock:
            self._value = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._value


comparison_counter = ComparisonCounter()


@dataclass
class Member:
    label: str
    features: FeatureVec
    source: str = ""


@dataclass
class Cluster:
    id: int
    shape: ShapeClass
    window_index: int
    window_side: int
    members: list[Member] = field(default_factory=list)
    mean: FeatureVec = ()

    @property
    def count(self) -> int:
        return len(self.members)

    def add(self, member: Member) -> None:
        """Append a member, updating the running mean incrementally."""
        self.members.append(member)
        n = len(self.members)
        if n == 1:
            self.mean = tuple(member.features)
        else:
            self.mean = tuple(
                m + (f - m) / n for m, f in zip(self.mean, member.features)
            )


def distance(a: FeatureVec, b: FeatureVec) -> float:
    return math.dist(a, b)


class ClusterIndex:
    """The global index: clusters plus the by_key / by_shape location maps."""

    def __init__(self, config_fingerprint: str = "") -> None:
        self.clusters: dict[int, Cluster] = {}
        self.by_key: dict[ClusterKey, int] = {}
        self.by_shape: dict[int, list[int]] = {}
        self.config_fingerprint = config_fingerprint
        self._next_id = 1
        self._lock = threading.RLock()

    # -- mutation ---------------------------------------------------------

    def insert(
        self,
        label: str,
        shape: ShapeClass,
        window_index: int,
        window_side: int,
        features: FeatureVec,
        source: str = "",
    ) -> tuple[int, bool]:
        """File a member under (shape, window); returns (cluster id, created)."""
        key = (int(shape), window_index)
        with self._lock:
            cid = self.by_key.get(key)
            created = cid is None
            if created:
                cid = self._next_id
                self._next_id += 1
                self.clusters[cid] = Cluster(
                    id=cid, shape=ShapeClass(int(shape)),
                    window_index=window_index, window_side=window_side,
                )
                self.by_key[key] = cid
                windows = self.by_shape.setdefault(int(shape), [])
                if window_index not in windows:
                    windows.append(window_index)
                    windows.sort()
            self.clusters[cid].add(Member(label, tuple(features), source))
            return cid, created

    # -- lookups ----------------------------------------------------------

    def lookup(self, shape: ShapeClass, window_index: int) -> int | None:
        return self.by_key.get((int(shape), window_index))

    def candidate_clusters(
        self, shape: ShapeClass, window_index: int, slack: int = 0
    ) -> list[int]:
        """Cluster ids whose window is within `slack` of the query window.

        Ordered by window distance, then ascending window index.
        """
        windows = self.by_shape.get(int(shape), [])
        hits = [w for w in windows if abs(w - window_index) <= slack]
        hits.sort(key=lambda w: (abs(w - window_index), w))
        return [self.by_key[(int(shape), w)] for w in hits]

    def has_shape(self, shape: ShapeClass) -> bool:
        return int(shape) in self.by_shape

    @property
    def member_count(self) -> int:
        return sum(c.count for c in self.clusters.values())

    def check_consistency(self) -> bool:
        """by_key and by_shape must describe exactly the same cluster set."""
        rebuilt_keys = {
            (int(c.shape), c.window_index): cid for cid, c in self.clusters.items()
        }
        if rebuilt_keys != self.by_key:
            return False
        rebuilt_shape: dict[int, list[int]] = {}
        for shape_code, window in self.by_key:
            rebuilt_shape.setdefault(shape_code, []).append(window)
        for windows in rebuilt_shape.values():
            windows.sort()
        if rebuilt_shape != self.by_shape:
            return False
        return all(
            sorted(set(w)) == w for w in self.by_shape.values()
        )


def nearest_member(cluster: Cluster, features: FeatureVec) -> tuple[str, float]:
    """Closest member by Euclidean distance; earliest-inserted wins ties.

    Every call charges the global comparison counter with the full cluster
    size, which is what the benchmark reports count.
    """
    best_label = cluster.members[0].label
    best_dist = distance(cluster.members[0].features, features)
    for member in cluster.members[1:]:
        d = distance(member.features, features)
        if d < best_dist:
            best_dist = d
            best_label = member.label
    comparison_counter.add(cluster.count)
    return best_label, best_dist


def rank_by_mean(clusters: list[Cluster], features: FeatureVec) -> list[Cluster]:
    """Stable sort of candidate clusters by distance to their mean vector."""
    return sorted(clusters, key=lambda c: distance(c.mean, features))


# -- persistence -----------------------------------------------------------


def _clusters_payload(index: ClusterIndex) -> list[dict]:
    return [
        {
            "id": c.id,
            "shape_code": int(c.shape),
            "window_index": c.window_index,
            "window_side": c.window_side,
            "mean": list(c.mean),
            "members": [
                {"label": m.label, "features": list(m.features), "source": m.source}
                for m in c.members
            ],
        }
        for c in sorted(index.clusters.values(), key=lambda c: c.id)
    ]


def _checksum(clusters_payload: list[dict]) -> str:
    canonical = json.dumps(clusters_payload, sort_keys=True, separators=(",", ":"))
    return format(zlib.crc32(canonical.encode("ascii")) & 0xFFFFFFFF, "08x")


def save(index: ClusterIndex, path: str | os.PathLike) -> None:
    """Write the index atomically (temp file + rename)."""
    payload = _clusters_payload(index)
    doc = {
        "version": DB_VERSION,
        "checksum": _checksum(payload),
        "config_fingerprint": index.config_fingerprint,
        "clusters": payload,
    }
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1), encoding="ascii")
    os.replace(tmp, target)


def load(path: str | os.PathLike) -> ClusterIndex:
    """Read a saved index; bit-identical to what `save` wrote."""
    try:
        doc = json.loads(Path(path).read_text(encoding="ascii"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DbCorruptionError(f"{path}: unparseable database file") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise DbCorruptionError(f"{path}: not a cluster database")
    if doc["version"] != DB_VERSION:
        raise DbVersionError(
            f"{path}: schema version {doc['version']} (supported: {DB_VERSION})"
        )
    clusters = doc.get("clusters")
    if not isinstance(clusters, list):
        raise DbCorruptionError(f"{path}: missing clusters array")
    if doc.get("checksum") != _checksum(clusters):
        raise DbCorruptionError(f"{path}: checksum mismatch")

    index = ClusterIndex(config_fingerprint=doc.get("config_fingerprint", ""))
    for item in clusters:
        cluster = Cluster(
            id=item["id"],
            shape=ShapeClass(item["shape_code"]),
            window_index=item["window_index"],
            window_side=item["window_side"],
            members=[
                Member(m["label"], tuple(m["features"]), m.get("source", ""))
                for m in item["members"]
            ],
            mean=tuple(item["mean"]),
        )
        index.clusters[cluster.id] = cluster
        index.by_key[(int(cluster.shape), cluster.window_index)] = cluster.id
        windows = index.by_shape.setdefault(int(cluster.shape), [])
        windows.append(cluster.window_index)
    for windows in index.by_shape.values():
        windows.sort()
    index._next_id = max(index.clusters, default=0) + 1
    return index
