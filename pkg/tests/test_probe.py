import numpy as np
import pytest

from l2rir.probe import (
    InsufficientDataError,
    classify_radius,
    fit_inverse_square,
    rain_density_profile,
    render_inverse_square,
)


def test_fit_recovers_e0_on_synthetic_renders():
    rng = np.random.default_rng(0)
    for _ in range(20):
        e0 = rng.uniform(0.1, 1.0)
        img = render_inverse_square(64, 256, (10.0, 32.0), e0)
        profile = fit_inverse_square(img, (10.0, 32.0))
        assert profile.e0 == pytest.approx(e0, rel=0.02)
        assert profile.point_source


def test_fit_linearity_in_e0():
    img = render_inverse_square(64, 256, (10.0, 32.0), 0.4)
    doubled = np.clip(img * 2, 0, 1)
    p1 = fit_inverse_square(img, (10.0, 32.0))
    p2 = fit_inverse_square(doubled, (10.0, 32.0))
    assert p2.e0 == pytest.approx(2 * p1.e0, rel=1e-6)


def test_uniform_image_flagged_non_point_source():
    img = np.full((64, 128, 3), 0.5)
    profile = fit_inverse_square(img, (5.0, 32.0))
    assert not profile.point_source
    assert profile.residual > 0.05


def test_center_outside_raises():
    with pytest.raises(ValueError):
        fit_inverse_square(np.full((16, 16, 3), 0.5), (100.0, 0.0))


def test_no_usable_samples_raises():
    img = np.full((8, 8, 3), 0.5)
    with pytest.raises(InsufficientDataError):
        fit_inverse_square(img, (4.0, 4.0), r_min=50.0)


def test_rain_density_all_zero_and_all_one():
    zero = np.zeros((100, 300))
    one = np.ones((100, 300))
    for mask, expect in ((zero, 0.0), (one, 1.0)):
        prof = rain_density_profile(mask, (50.0, 50.0), patch_size=20)
        assert prof.samples
        assert all(m == expect for _, m in prof.samples)


def test_rain_density_checkerboard_exact_counts():
    ys, xs = np.mgrid[0:100, 0:300]
    mask = ((ys + xs) % 2).astype(np.float64)
    prof = rain_density_profile(mask, (50.0, 50.0), patch_size=20)
    # even patch size on a checkerboard: exactly half the pixels are rain
    assert all(m == pytest.approx(0.5, abs=1 / 20) for _, m in prof.samples)


def test_rain_density_integer_exact_oracle():
    rng = np.random.default_rng(1)
    mask = (rng.uniform(size=(80, 200)) < 0.3).astype(np.float64)
    prof = rain_density_profile(mask, (40.0, 40.0), patch_size=20)
    half = 10
    for r, m in prof.samples:
        xi = int(round(40.0 + r))
        patch = mask[40 - half : 40 - half + 20, xi - half : xi - half + 20]
        assert m == patch.sum() / 400.0


def test_rain_density_requires_binary_mask():
    with pytest.raises(ValueError):
        rain_density_profile(np.full((50, 50), 0.5), (25.0, 25.0))


def test_rain_density_insufficient_data():
    with pytest.raises(InsufficientDataError):
        rain_density_profile(np.ones((5, 5)), (2.0, 2.0), patch_size=20)


@pytest.mark.parametrize(
    "r,label",
    [
        (100, "overexposed"),
        (0, "overexposed"),
        (199.999, "overexposed"),
        (200, "rain-dominated"),
        (500, "rain-dominated"),
        (899.999, "rain-dominated"),
        (900, "lowlight-dominated"),
        (1e9, "lowlight-dominated"),
    ],
)
def test_classify_radius(r, label):
    assert classify_radius(r) == label


def test_classify_radius_negative_raises():
    with pytest.raises(ValueError):
        classify_radius(-1.0)


def test_classify_radius_custom_breakpoints():
    assert classify_radius(50, inner=40, outer=60) == "rain-dominated"
