import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from helpers import make_pair, write_source_pairs
from l2rir.imaging import load_rgb, luminance, save_rgb
from l2rir.synthesis import (
    DatasetManifest,
    SynthesisParams,
    SynthesisRanges,
    add_light_patches,
    build_dataset,
    darken,
    synthesize_pair,
)

DATA = Path(__file__).parent / "data"


def test_darken_identity():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, size=(8, 8, 3))
    np.testing.assert_allclose(darken(img, 1.0, 1.0), img, atol=1e-12)


def test_darken_uniform_value():
    img = np.full((4, 4, 3), 0.5)
    np.testing.assert_allclose(darken(img, 2.0, 0.8), 0.2, atol=1e-12)


def test_darken_monotone_contraction():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, size=(8, 8, 3))
    out = darken(img, 1.7, 0.6)
    assert np.all(out <= img + 1e-12)


def test_darken_invalid_params():
    img = np.zeros((2, 2, 3))
    with pytest.raises(ValueError):
        darken(img, 0.0, 0.5)
    with pytest.raises(ValueError):
        darken(img, 1.0, 1.5)


def test_light_patches_identity():
    rng = np.random.default_rng(2)
    img = rng.uniform(0, 1, size=(16, 16, 3))
    params = SynthesisParams(n_light_patches=0, global_dim=1.0)
    np.testing.assert_array_equal(
        add_light_patches(img, params, np.random.default_rng(0)), img
    )


def test_light_patches_deterministic():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, size=(32, 32, 3))
    params = SynthesisParams(n_light_patches=2, seed=7)
    a = add_light_patches(img, params, np.random.default_rng(7))
    b = add_light_patches(img, params, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_light_patch_closed_form_falloff():
    img = np.full((64, 64, 3), 0.3)
    params = SynthesisParams(
        n_light_patches=1,
        patch_radius_range=(10.0, 10.0),
        patch_boost=2.0,
        global_dim=0.9,
    )
    rng = np.random.default_rng(5)
    # replay the rng draws to know the sampled center
    probe = np.random.default_rng(5)
    cx, cy = probe.uniform(0, 63), probe.uniform(0, 63)
    out = add_light_patches(img, params, rng)
    ci, cj = int(round(cy)), int(round(cx))
    d = np.hypot(cj - cx, ci - cy)
    blend = 0.5 * (1 + np.cos(np.pi * d / 10.0))
    expected = 0.3 * (0.9 + (2.0 - 0.9) * blend)
    assert out[ci, cj, 0] == pytest.approx(min(expected, 1.0), abs=1e-9)
    # far corner is outside the disk: dimmed only
    corner = max(
        [(0, 0), (0, 63), (63, 0), (63, 63)],
        key=lambda p: np.hypot(p[1] - cx, p[0] - cy),
    )
    assert out[corner[0], corner[1], 0] == pytest.approx(0.3 * 0.9, abs=1e-9)


def test_synthesize_pair_identity_params():
    rng = np.random.default_rng(6)
    rainy, clean = make_pair(rng, 32, 32)
    params = SynthesisParams(darken_gamma=1.0, darken_gain=1.0, n_light_patches=0, global_dim=1.0)
    llr, gt = synthesize_pair(rainy, clean, params)
    np.testing.assert_array_equal(llr, rainy)
    np.testing.assert_array_equal(gt, clean)


def test_synthesize_pair_darkens_on_average():
    rng = np.random.default_rng(7)
    rainy, clean = make_pair(rng, 32, 32)
    llr, _ = synthesize_pair(rainy, clean, SynthesisParams(n_light_patches=0))
    assert luminance(llr).mean() < luminance(rainy).mean()


def test_synthesize_pair_shape_mismatch():
    with pytest.raises(ValueError):
        synthesize_pair(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)), SynthesisParams())


def test_build_dataset_split_counts(tmp_path):
    src = tmp_path / "src"
    write_source_pairs(src, 10, seed=0, h=32, w=32)
    manifest = build_dataset(src, tmp_path / "out", split_ratio=0.8, seed=1)
    assert manifest.count("train") == 8
    assert manifest.count("test") == 2
    for e in manifest.entries:
        assert (tmp_path / "out" / e.llr).exists()
        assert (tmp_path / "out" / e.gt).exists()


def test_build_dataset_unpaired_skipped(tmp_path, caplog):
    src = tmp_path / "src"
    write_source_pairs(src, 3, seed=0, h=32, w=32)
    rng = np.random.default_rng(9)
    save_rgb(make_pair(rng, 32, 32)[0], src / "orphan_rain.png")
    manifest = build_dataset(src, tmp_path / "out", seed=0)
    assert manifest.skipped == 1
    assert all(e.id != "orphan" for e in manifest.entries)


def test_build_dataset_empty_source(tmp_path):
    (tmp_path / "src").mkdir()
    with pytest.raises(ValueError):
        build_dataset(tmp_path / "src", tmp_path / "out")


def _tree_hash(root: Path) -> str:
    digest = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            digest.update(str(p.relative_to(root)).encode())
            digest.update(p.read_bytes())
    return digest.hexdigest()


def test_build_dataset_byte_identical_across_runs(tmp_path):
    src = tmp_path / "src"
    write_source_pairs(src, 4, seed=3, h=32, w=32)
    build_dataset(src, tmp_path / "a", seed=5)
    build_dataset(src, tmp_path / "b", seed=5)
    assert _tree_hash(tmp_path / "a") == _tree_hash(tmp_path / "b")


def test_gt_hash_equal_to_source(tmp_path):
    src = tmp_path / "src"
    write_source_pairs(src, 2, seed=4, h=32, w=32)
    manifest = build_dataset(src, tmp_path / "out", seed=0)
    for e in manifest.entries:
        src_bytes = (src / f"{e.id}_gt.png").read_bytes()
        assert (tmp_path / "out" / e.gt).read_bytes() == src_bytes


def test_manifest_round_trip(tmp_path):
    src = tmp_path / "src"
    write_source_pairs(src, 3, seed=1, h=32, w=32)
    manifest = build_dataset(src, tmp_path / "out", seed=2)
    loaded = DatasetManifest.load(tmp_path / "out" / "manifest.json")
    assert loaded == manifest


def test_golden_synthesis_pair():
    """Synthesis with frozen params matches the checked-in golden output."""
    rainy = load_rgb(DATA / "sample_rain.png")
    clean = load_rgb(DATA / "sample_gt.png")
    params = SynthesisParams(
        darken_gamma=2.0,
        darken_gain=0.5,
        n_light_patches=1,
        patch_radius_range=(8.0, 16.0),
        patch_boost=2.0,
        global_dim=0.85,
        seed=1234,
    )
    llr, _ = synthesize_pair(rainy, clean, params)
    golden = load_rgb(DATA / "golden_llr.png")
    np.testing.assert_array_equal(np.rint(llr * 255), np.rint(golden * 255))
