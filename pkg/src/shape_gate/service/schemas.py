"""Pydantic request/response models for the service endpoints."""
from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class TrainRequest(BaseModel):
    db_path: str
    manifests: list[str] = Field(min_length=1)
    config_path: str | None = None


class TrainRowModel(BaseModel):
    label: str
    shape: str
    window_index: int
    window_side: int
    cluster_id: int
    created_new_cluster: bool


class TrainSceneModel(BaseModel):
    scene: str
    blobs_found: int
    rows: list[TrainRowModel]


class TrainResponse(BaseModel):
    db_path: str
    created_db: bool
    clusters: int
    members: int
    scenes: list[TrainSceneModel]


class DetectRequest(BaseModel):
    db_path: str
    image_path: str
    tau: float | None = None
    slack: int | None = None
    exhaustive: bool = False
    threads: int = Field(default=1, ge=1)
    config_path: str | None = None


class DetectionModel(BaseModel):
    blob: int
    outcome: str
    label: str | None
    distance: float | None
    reason: str | None
    shape: str
    window: int
    window_side: int
    clusters_visited: int
    members_compared: int
    elapsed: int
    keypoint_stats: list[float] | None


class DetectResponse(BaseModel):
    image_path: str
    all_detected: bool
    results: list[DetectionModel]


class BenchRequest(BaseModel):
    db_path: str
    queries_path: str
    repeats: int = 5
    tau: float | None = None
    slack: int | None = None
    config_path: str | None = None


class BenchRowModel(BaseModel):
    mode: str
    run: int
    query: int
    ns: int
    comparisons: int
    outcome: str


class BenchModeModel(BaseModel):
    total_ns: int
    total_comparisons: int
    median_query_ns: float


class BenchResponse(BaseModel):
    db_members: int
    query_count: int
    repeats: int
    gated: BenchModeModel
    exhaustive: BenchModeModel
    speedup_time: float
    speedup_comparisons: float
    rows: list[BenchRowModel]


class ClusterStatModel(BaseModel):
    id: int
    shape: str
    window_index: int
    window_side: int
    count: int
    mean_norm: float


class DbStatsResponse(BaseModel):
    db_path: str
    clusters: list[ClusterStatModel]
    total_members: int
    consistent: bool


class CorpusRequest(BaseModel):
    out_dir: str
    seed: int = 0
    per_class: int = Field(default=10, ge=1)
    classes: list[str] | None = None
    noise_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    window_side: int | None = None


class CorpusResponse(BaseModel):
    out_dir: str
    scenes: int
    manifests: int


class ErrorBody(BaseModel):
    code: str
    message: str
