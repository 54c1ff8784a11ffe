"""Service endpoints, exercised through the ASGI test client."""
import json

import pytest
from fastapi.testclient import TestClient

from shape_gate.corpus import gen_corpus
from shape_gate.features import ShapeClass
from shape_gate.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    summary = gen_corpus(
        root / "corpus", seed=11, per_class=3,
        classes=(ShapeClass.CIRCLE, ShapeClass.SQUARE, ShapeClass.LINE),
    )
    return root, summary


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_train_detect_roundtrip(client, workspace):
    root, summary = workspace
    db = root / "db.json"
    resp = client.post(
        "/train",
        json={"db_path": str(db), "manifests": [str(p) for p in summary.manifest_paths]},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["created_db"] and body["members"] == 9
    assert db.is_file()

    scene = summary.scene_paths[0]
    resp = client.post(
        "/detect", json={"db_path": str(db), "image_path": str(scene)}
    )
    assert resp.status_code == 200
    detection = resp.json()
    assert detection["all_detected"]
    (result,) = detection["results"]
    assert result["label"] == summary.labels[0]
    assert result["distance"] == 0.0


def test_train_label_mismatch_is_400_and_db_untouched(client, workspace, tmp_path):
    root, summary = workspace
    db = root / "db.json"
    before = db.read_bytes()
    bad = tmp_path / "bad.txt"
    scene = summary.scene_paths[0]
    bad.write_text(f"{scene}\nlabel-a\nlabel-b\n")
    resp = client.post(
        "/train", json={"db_path": str(db), "manifests": [str(bad)]}
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "label_mismatch"
    assert db.read_bytes() == before


def test_detect_missing_db_is_404(client, workspace):
    root, _ = workspace
    resp = client.post(
        "/detect",
        json={"db_path": str(root / "nope.json"), "image_path": "x.pgm"},
    )
    assert resp.status_code == 404
    assert resp.json()["code"] == "not_found"


def test_fingerprint_mismatch_is_409(client, workspace, tmp_path):
    root, summary = workspace
    db = root / "db.json"
    other = tmp_path / "other.toml"
    other.write_text("[shape]\nline_max_aspect = 0.33\n")
    resp = client.post(
        "/detect",
        json={
            "db_path": str(db),
            "image_path": str(summary.scene_paths[0]),
            "config_path": str(other),
        },
    )
    assert resp.status_code == 409
    assert resp.json()["code"] == "fingerprint_mismatch"


def test_corrupt_db_is_409(client, workspace):
    root, _ = workspace
    db = root / "db.json"
    doc = json.loads(db.read_text())
    doc["checksum"] = "00000000"
    bad = root / "corrupt.json"
    bad.write_text(json.dumps(doc))
    resp = client.get("/db/stats", params={"db_path": str(bad)})
    assert resp.status_code == 409
    assert resp.json()["code"] == "db_corrupt"


def test_db_stats(client, workspace):
    root, _ = workspace
    resp = client.get("/db/stats", params={"db_path": str(root / "db.json")})
    assert resp.status_code == 200
    body = resp.json()
    assert body["consistent"]
    assert body["total_members"] == 9
    assert all(c["count"] >= 1 for c in body["clusters"])


def test_bench_endpoint(client, workspace):
    root, summary = workspace
    resp = client.post(
        "/bench",
        json={
            "db_path": str(root / "db.json"),
            "queries_path": str(summary.out_dir / "scenes.txt"),
            "repeats": 2,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["query_count"] == 9
    assert len(body["rows"]) == 2 * 2 * 9
    assert body["speedup_comparisons"] >= 1.0


def test_corpus_endpoint(client, tmp_path):
    resp = client.post(
        "/corpus/generate",
        json={"out_dir": str(tmp_path / "cc"), "seed": 4, "per_class": 2,
              "classes": ["circle", "line"]},
    )
    assert resp.status_code == 200
    assert resp.json()["scenes"] == 4


def test_corpus_unknown_class_is_400(client, tmp_path):
    resp = client.post(
        "/corpus/generate",
        json={"out_dir": str(tmp_path / "cc"), "per_class": 1,
              "classes": ["hexagon"]},
    )
    assert resp.status_code == 400


def test_exhaustive_flag(client, workspace):
    root, summary = workspace
    resp = client.post(
        "/detect",
        json={
            "db_path": str(root / "db.json"),
            "image_path": str(summary.scene_paths[0]),
            "exhaustive": True,
        },
    )
    body = resp.json()
    (result,) = body["results"]
    assert result["members_compared"] == 9  # whole database scanned
