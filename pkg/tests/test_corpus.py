"""Synthetic corpus generator: determinism, structure, label fidelity."""
import numpy as np
import pytest

from shape_gate.config import EngineConfig
from shape_gate.corpus import (
    ALL_CLASSES,
    BENCH_CLASSES,
    add_salt_pepper,
    gen_corpus,
    generate_shape,
)
from shape_gate.features import ShapeClass, classify_shape, extract_features
from shape_gate.pgm import read_pgm
from shape_gate.pipeline import preprocess_scene, window_family
from shape_gate.windows import map_to_window


def corpus_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


class TestGenCorpus:
    def test_deterministic_per_seed(self, tmp_path):
        a = gen_corpus(tmp_path / "a", seed=7, per_class=3)
        b = gen_corpus(tmp_path / "b", seed=7, per_class=3)
        assert corpus_bytes(a.out_dir) == corpus_bytes(b.out_dir)

    def test_different_seed_differs(self, tmp_path):
        a = gen_corpus(tmp_path / "a", seed=7, per_class=2)
        b = gen_corpus(tmp_path / "b", seed=8, per_class=2)
        assert corpus_bytes(a.out_dir) != corpus_bytes(b.out_dir)

    def test_counts_and_listings(self, tmp_path):
        summary = gen_corpus(tmp_path / "c", seed=1, per_class=4)
        assert len(summary.scene_paths) == 4 * len(ALL_CLASSES)
        assert len(summary.manifest_paths) == len(summary.scene_paths)
        scenes = (tmp_path / "c" / "scenes.txt").read_text().splitlines()
        assert len(scenes) == len(summary.scene_paths)

    def test_manifest_names_scene_and_label(self, tmp_path):
        summary = gen_corpus(tmp_path / "c", seed=1, per_class=1,
                             classes=(ShapeClass.CIRCLE,))
        lines = summary.manifest_paths[0].read_text().splitlines()
        assert lines[0] == summary.scene_paths[0].name
        assert lines[1] == "circle-000"

    def test_single_blob_per_scene(self, tmp_path):
        cfg = EngineConfig()
        summary = gen_corpus(tmp_path / "c", seed=3, per_class=2)
        for scene in summary.scene_paths:
            assert len(preprocess_scene(read_pgm(scene), cfg)) == 1

    def test_window_uniform_fit(self, tmp_path):
        cfg = EngineConfig()
        family = window_family(cfg)
        summary = gen_corpus(
            tmp_path / "c", seed=9, per_class=4, classes=BENCH_CLASSES, window_side=32
        )
        for scene in summary.scene_paths:
            (blob,) = preprocess_scene(read_pgm(scene), cfg)
            window = map_to_window(blob.bbox[2], blob.bbox[3], family)
            assert window.side == 32

    def test_circle_scenes_classify_as_circles(self, tmp_path):
        cfg = EngineConfig()
        cfg.preprocess.median_radius = 0
        summary = gen_corpus(tmp_path / "c", seed=5, per_class=20,
                             classes=(ShapeClass.CIRCLE,))
        hits = 0
        for scene in summary.scene_paths:
            (blob,) = preprocess_scene(read_pgm(scene), cfg)
            fv = extract_features(blob)
            hits += classify_shape(fv, blob, cfg.shape) is ShapeClass.CIRCLE
        assert hits >= 19

    def test_noise_is_applied_and_cleanable(self, tmp_path):
        cfg = EngineConfig()  # median radius 1 by default
        summary = gen_corpus(tmp_path / "c", seed=5, per_class=3,
                             classes=(ShapeClass.SQUARE,), noise_rate=0.02)
        for scene in summary.scene_paths:
            img = read_pgm(scene)
            assert ((img != 30) & (img != 220)).any()  # noise really present
            blobs = preprocess_scene(img, cfg)
            assert len(blobs) == 1


class TestShapeMasks:
    @pytest.mark.parametrize("shape", ALL_CLASSES)
    def test_masks_are_nonempty_and_cropped(self, shape, rng):
        mask = generate_shape(shape, rng)
        assert mask.any()
        assert mask[0].any() or mask[:, 0].any()  # cropped tight
        assert mask[-1].any() or mask[:, -1].any()

    def test_salt_pepper_rate(self, rng):
        img = np.full((200, 200), 128, dtype=np.uint8)
        noisy = add_salt_pepper(img, rng, 0.02)
        flipped = (noisy != 128).mean()
        assert 0.01 <= flipped <= 0.03
        assert set(np.unique(noisy)) <= {0, 128, 255}
