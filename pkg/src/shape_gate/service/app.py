"""The detection service: train, detect, bench, db-stats, corpus endpoints.

The service is stateless between requests; every call names the database file
it works on. Databases are written atomically and only after a whole train
request has succeeded, so a failed request never mutates the file. A database
built under a different shape/scale configuration is refused (409) rather
than silently producing garbage distances.
"""
from __future__ import annotations

import math
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .. import __version__, bench as benchmod, index as indexmod
from ..config import EngineConfig, load_config
from ..corpus import ALL_CLASSES, gen_corpus
from ..errors import (
    ConfigError,
    DbCorruptionError,
    DbVersionError,
    FingerprintMismatchError,
    ImageFormatError,
    ManifestError,
    ShapeGateError,
)
from ..features import ShapeClass
from ..pgm import read_image
from ..pipeline import detect_scene, train_manifest
from . import schemas

_ERROR_MAP: list[tuple[type, int, str]] = [
    (ManifestError, 400, "label_mismatch"),
    (ImageFormatError, 400, "bad_image"),
    (ConfigError, 400, "bad_config"),
    (FingerprintMismatchError, 409, "fingerprint_mismatch"),
    (DbVersionError, 409, "db_version"),
    (DbCorruptionError, 409, "db_corrupt"),
]


def _load_index(db_path: str, cfg: EngineConfig | None) -> indexmod.ClusterIndex:
    if not Path(db_path).is_file():
        raise FileNotFoundError(db_path)
    idx = indexmod.load(db_path)
    if cfg is not None and idx.config_fingerprint != cfg.fingerprint():
        raise FingerprintMismatchError(
            f"{db_path} was built under a different shape/scale configuration"
        )
    return idx


def create_app() -> FastAPI:
    app = FastAPI(title="shape-gate", version=__version__)

    @app.exception_handler(ShapeGateError)
    async def engine_error(request: Request, exc: ShapeGateError):
        for etype, status, code in _ERROR_MAP:
            if isinstance(exc, etype):
                return JSONResponse(
                    status_code=status, content={"code": code, "message": str(exc)}
                )
        return JSONResponse(
            status_code=500, content={"code": "engine_error", "message": str(exc)}
        )

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404, content={"code": "not_found", "message": str(exc)}
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        cfg = load_config(req.config_path)
        created = not Path(req.db_path).is_file()
        idx = (
            indexmod.ClusterIndex(config_fingerprint=cfg.fingerprint())
            if created
            else _load_index(req.db_path, cfg)
        )
        scenes = []
        for manifest in req.manifests:
            if not Path(manifest).is_file():
                raise ManifestError(f"manifest not found: {manifest}")
            report = train_manifest(manifest, idx, cfg)
            scenes.append(
                schemas.TrainSceneModel(
                    scene=report.scene,
                    blobs_found=report.blobs_found,
                    rows=[
                        schemas.TrainRowModel(
                            label=r.label,
                            shape=r.shape.name,
                            window_index=r.window_index,
                            window_side=r.window_side,
                            cluster_id=r.cluster_id,
                            created_new_cluster=r.created_new_cluster,
                        )
                        for r in report.rows
                    ],
                )
            )
        indexmod.save(idx, req.db_path)
        return schemas.TrainResponse(
            db_path=req.db_path,
            created_db=created,
            clusters=len(idx.clusters),
            members=idx.member_count,
            scenes=scenes,
        )

    @app.post("/detect", response_model=schemas.DetectResponse)
    def detect(req: schemas.DetectRequest):
        cfg = load_config(req.config_path)
        idx = _load_index(req.db_path, cfg)
        if not Path(req.image_path).is_file():
            raise FileNotFoundError(req.image_path)
        gray = read_image(req.image_path, allow_png=cfg.io.allow_png)
        results = detect_scene(
            gray, idx, cfg, tau=req.tau, slack=req.slack,
            exhaustive=req.exhaustive, threads=req.threads,
        )
        models = [schemas.DetectionModel(**r.to_dict()) for r in results]
        return schemas.DetectResponse(
            image_path=req.image_path,
            all_detected=all(r.outcome == "detected" for r in results),
            results=models,
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def run_bench(req: schemas.BenchRequest):
        cfg = load_config(req.config_path)
        idx = _load_index(req.db_path, cfg)
        if not Path(req.queries_path).is_file():
            raise FileNotFoundError(req.queries_path)
        scenes = benchmod.read_query_list(req.queries_path)
        queries = benchmod.prepare_queries(scenes, cfg)
        tau = cfg.detect.tau if req.tau is None else req.tau
        slack = cfg.detect.slack if req.slack is None else req.slack
        result = benchmod.run_bench(idx, queries, tau, slack, repeats=req.repeats)
        return schemas.BenchResponse(
            db_members=result.db_members,
            query_count=result.query_count,
            repeats=result.repeats,
            gated=schemas.BenchModeModel(**result.gated.__dict__),
            exhaustive=schemas.BenchModeModel(**result.exhaustive.__dict__),
            speedup_time=result.speedup_time,
            speedup_comparisons=result.speedup_comparisons,
            rows=[schemas.BenchRowModel(**r.__dict__) for r in result.rows],
        )

    @app.get("/db/stats", response_model=schemas.DbStatsResponse)
    def db_stats(db_path: str = Query(...)):
        idx = _load_index(db_path, cfg=None)  # stats work across configs
        clusters = [
            schemas.ClusterStatModel(
                id=c.id,
                shape=c.shape.name,
                window_index=c.window_index,
                window_side=c.window_side,
                count=c.count,
                mean_norm=math.sqrt(sum(v * v for v in c.mean)),
            )
            for c in sorted(idx.clusters.values(), key=lambda c: c.id)
        ]
        return schemas.DbStatsResponse(
            db_path=db_path,
            clusters=clusters,
            total_members=idx.member_count,
            consistent=idx.check_consistency(),
        )

    @app.post("/corpus/generate", response_model=schemas.CorpusResponse)
    def corpus(req: schemas.CorpusRequest):
        if req.classes is None:
            classes = ALL_CLASSES
        else:
            try:
                classes = tuple(ShapeClass[name.upper()] for name in req.classes)
            except KeyError as exc:
                raise ConfigError(f"unknown shape class {exc.args[0]!r}") from exc
        summary = gen_corpus(
            req.out_dir,
            seed=req.seed,
            per_class=req.per_class,
            classes=classes,
            noise_rate=req.noise_rate,
            window_side=req.window_side,
        )
        return schemas.CorpusResponse(
            out_dir=str(summary.out_dir),
            scenes=len(summary.scene_paths),
            manifests=len(summary.manifest_paths),
        )

    return app


app = create_app()
