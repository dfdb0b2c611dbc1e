import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from l2rir import ffr, pnet
from l2rir.imaging import (
    compute_attention_map,
    compute_detail_image,
    load_rgb,
    save_rgb,
    split_regions,
)

rgb_images = arrays(
    np.float64,
    st.tuples(st.integers(2, 12), st.integers(2, 12), st.just(3)),
    elements=st.floats(0, 1, width=32),
)


def test_attention_map_black_white():
    black = np.zeros((4, 5, 3))
    white = np.ones((4, 5, 3))
    assert np.all(compute_attention_map(black) == 1.0)
    assert np.all(compute_attention_map(white) == 0.0)


def test_attention_map_pixel_value():
    img = np.full((1, 1, 3), 0.0)
    img[0, 0] = [0.2, 0.7, 0.1]
    assert compute_attention_map(img)[0, 0] == pytest.approx(0.3)


def test_attention_map_monotone_in_max_channel():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 0.8, size=(6, 6, 3))
    before = compute_attention_map(img)
    brighter = img.copy()
    brighter[3, 3] = np.minimum(brighter[3, 3] + 0.1, 1.0)
    after = compute_attention_map(brighter)
    assert after[3, 3] <= before[3, 3]


def test_split_regions_extremes():
    rng = np.random.default_rng(2)
    img = rng.uniform(0, 1, size=(5, 7, 3))
    zeros = np.zeros((5, 7))
    pair = split_regions(img, zeros)
    assert np.array_equal(pair.dark, img)
    assert np.all(pair.light == 0)
    pair = split_regions(img, np.ones((5, 7)))
    assert np.all(pair.dark == 0)
    assert np.array_equal(pair.light, img)


def test_split_regions_matches_scalar_oracle():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, size=(6, 4, 3))
    amap = rng.uniform(0, 1, size=(6, 4))
    pair = split_regions(img, amap)
    for y in range(6):
        for x in range(4):
            for c in range(3):
                assert pair.dark[y, x, c] == pytest.approx(
                    img[y, x, c] * (1 - amap[y, x]), abs=1e-12
                )
                assert pair.light[y, x, c] == pytest.approx(
                    img[y, x, c] * amap[y, x], abs=1e-12
                )
    assert pair.concatenated.shape == (6, 4, 6)


def test_split_regions_shape_mismatch():
    with pytest.raises(ValueError):
        split_regions(np.zeros((4, 4, 3)), np.zeros((4, 5)))


@settings(max_examples=50)
@given(rgb_images)
def test_complement_identity(img):
    pair = split_regions(img, compute_attention_map(img))
    np.testing.assert_allclose(pair.dark + pair.light, img, atol=1e-6)


def test_detail_image_grayscale_cancels():
    g = np.repeat(np.random.default_rng(4).uniform(0, 1, (5, 5, 1)), 3, axis=2)
    assert np.all(compute_detail_image(g) == 0)


def test_detail_image_pure_red():
    img = np.zeros((2, 2, 3))
    img[..., 0] = 1.0
    np.testing.assert_array_equal(compute_detail_image(img)[0, 0], [1.0, 1.0, 0.0])


def test_detail_image_matches_scalar_oracle():
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 1, size=(7, 5, 3))
    det = compute_detail_image(img)
    for y in range(7):
        for x in range(5):
            r, g, b = img[y, x]
            assert det[y, x, 0] == pytest.approx(abs(r - g), abs=1e-12)
            assert det[y, x, 1] == pytest.approx(abs(r - b), abs=1e-12)
            assert det[y, x, 2] == pytest.approx(abs(g - b), abs=1e-12)
    assert det.min() >= 0 and det.max() <= 1


def test_detail_invariant_to_shared_channel_offset():
    rng = np.random.default_rng(6)
    img = rng.uniform(0, 0.5, size=(8, 8, 3))
    for c in (0.1, 0.3, 0.5):
        shifted = np.clip(img + c, 0, 1)
        np.testing.assert_allclose(
            compute_detail_image(img), compute_detail_image(shifted), atol=1e-12
        )


def test_png_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    img = np.rint(rng.uniform(0, 1, size=(9, 11, 3)) * 255) / 255
    save_rgb(img, tmp_path / "x.png")
    np.testing.assert_array_equal(load_rgb(tmp_path / "x.png"), img)


def test_torch_ops_match_numpy():
    rng = np.random.default_rng(8)
    img = rng.uniform(0, 1, size=(6, 6, 3))
    t = torch.from_numpy(img.transpose(2, 0, 1)).unsqueeze(0)
    amap_t = pnet.attention_map(t)[0, 0].numpy()
    np.testing.assert_allclose(amap_t, compute_attention_map(img), atol=1e-12)

    stack = pnet.region_stack(t)[0].numpy().transpose(1, 2, 0)
    pair = split_regions(img, compute_attention_map(img))
    np.testing.assert_allclose(stack, pair.concatenated, atol=1e-12)

    det_t = ffr.detail_image(t)[0].numpy().transpose(1, 2, 0)
    np.testing.assert_allclose(det_t, compute_detail_image(img), atol=1e-12)
