"""Diagnostics around a point light source: inverse-square falloff fit and
rain-density-vs-radius profiling, used to justify region-wise degradation learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import luminance, validate_gray, validate_rgb

# Radii (pixels) separating the degradation regimes around a light source.
DEFAULT_INNER_RADIUS = 200.0
DEFAULT_OUTER_RADIUS = 900.0


class InsufficientDataError(RuntimeError):
    """Not enough usable samples to fit or profile."""


@dataclass
class LightProfile:
    center: tuple[float, float]
    e0: float
    samples: list[tuple[float, float]]  # (r, mean luminance)
    residual: float
    point_source: bool


@dataclass
class RainDensityProfile:
    patch_size: int
    samples: list[tuple[float, float]] = field(default_factory=list)  # (r, density)


def _check_center(shape: tuple[int, int], center: tuple[float, float]) -> None:
    x0, y0 = center
    h, w = shape
    if not (0 <= x0 < w and 0 <= y0 < h):
        raise ValueError(f"center {center} outside image of size {w}x{h}")


def _ray_direction(shape: tuple[int, int], center: tuple[float, float]) -> tuple[float, float]:
    # Default: along the longest axis, toward the farther edge.
    h, w = shape
    x0, y0 = center
    if w >= h:
        return (1.0, 0.0) if (w - 1 - x0) >= x0 else (-1.0, 0.0)
    return (0.0, 1.0) if (h - 1 - y0) >= y0 else (0.0, -1.0)


def fit_inverse_square(
    img: np.ndarray,
    center: tuple[float, float],
    r_min: float = 5.0,
    direction: tuple[float, float] | None = None,
    clip_threshold: float = 0.99,
    floor_threshold: float = 0.0,
    residual_threshold: float = 0.05,
) -> LightProfile:
    """Fit E = E0 / r^2 to luminance samples along a ray from `center`.

    Samples with r < r_min or clipped luminance (>= clip_threshold) are excluded
    from the fit. `point_source` is False when the RMS residual exceeds
    `residual_threshold` (e.g. a uniform image has no falloff to fit).
    """
    img = validate_rgb(img)
    _check_center(img.shape[:2], center)
    lum = luminance(img)
    h, w = lum.shape
    x0, y0 = center
    dx, dy = direction if direction is not None else _ray_direction((h, w), center)
    n = float(np.hypot(dx, dy))
    if n == 0:
        raise ValueError("direction must be nonzero")
    dx, dy = dx / n, dy / n

    samples: list[tuple[float, float]] = []
    bases: list[float] = []
    t = 1.0
    while True:
        x, y = x0 + dx * t, y0 + dy * t
        xi, yi = int(round(x)), int(round(y))
        if not (1 <= xi < w - 1 and 1 <= yi < h - 1):
            break
        # 3x3 neighborhood mean stabilizes the luminance estimate; the fit
        # basis averages 1/r^2 over the same window so smoothing adds no bias
        e = float(lum[yi - 1 : yi + 2, xi - 1 : xi + 2].mean())
        ny, nx = np.mgrid[yi - 1 : yi + 2, xi - 1 : xi + 2]
        r2 = (nx - x0) ** 2 + (ny - y0) ** 2
        bases.append(float(np.mean(1.0 / np.maximum(r2, 1e-12))))
        samples.append((float(np.hypot(x - x0, y - y0)), e))
        t += 1.0

    # clipped highlights are excluded; floor_threshold > 0 additionally drops
    # near-zero tails when the input was 8-bit quantized
    usable = [
        (r, e, b)
        for (r, e), b in zip(samples, bases)
        if r > r_min and floor_threshold <= e < clip_threshold
    ]
    if not usable:
        raise InsufficientDataError(
            f"no usable samples beyond r_min={r_min} (got {len(samples)} raw samples)"
        )
    es = np.array([e for _, e, _ in usable])
    basis = np.array([b for _, _, b in usable])
    # Least squares for E = E0/r^2, linear in E0
    e0 = float((es * basis).sum() / (basis**2).sum())
    residual = float(np.sqrt(np.mean((es - e0 * basis) ** 2)))
    return LightProfile(
        center=(float(x0), float(y0)),
        e0=e0,
        samples=samples,
        residual=residual,
        point_source=residual <= residual_threshold,
    )


def render_inverse_square(
    height: int, width: int, center: tuple[float, float], e0: float
) -> np.ndarray:
    """Synthetic gray scene obeying E = E0/r^2 exactly (clipped to [0,1])."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    r2 = (xs - center[0]) ** 2 + (ys - center[1]) ** 2
    with np.errstate(divide="ignore"):
        e = np.where(r2 > 0, e0 / np.maximum(r2, 1e-12), 1.0)
    e = np.clip(e, 0.0, 1.0)
    return np.repeat(e[..., None], 3, axis=2)


def rain_density_profile(
    mask: np.ndarray,
    center: tuple[float, float],
    patch_size: int = 20,
    direction: tuple[float, float] | None = None,
    step: int | None = None,
) -> RainDensityProfile:
    """Fraction of rain pixels in patches marching along a ray from `center`.

    Patches that would extend outside the mask are skipped.
    """
    mask = validate_gray(mask)
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("rain mask must be binary (values in {0, 1})")
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    _check_center(mask.shape, center)
    h, w = mask.shape
    x0, y0 = center
    dx, dy = direction if direction is not None else _ray_direction((h, w), center)
    n = float(np.hypot(dx, dy))
    dx, dy = dx / n, dy / n
    step = step or patch_size
    half = patch_size // 2

    prof = RainDensityProfile(patch_size=patch_size)
    t = 0.0
    while True:
        x, y = x0 + dx * t, y0 + dy * t
        xi, yi = int(round(x)), int(round(y))
        if not (0 <= xi < w and 0 <= yi < h):
            break
        x_lo, y_lo = xi - half, yi - half
        x_hi, y_hi = x_lo + patch_size, y_lo + patch_size
        if x_lo >= 0 and y_lo >= 0 and x_hi <= w and y_hi <= h:
            patch = mask[y_lo:y_hi, x_lo:x_hi]
            m = float(patch.sum() / patch.size)
            prof.samples.append((float(np.hypot(x - x0, y - y0)), m))
        t += step

    if not prof.samples:
        raise InsufficientDataError("no patch fits inside the mask along the ray")
    return prof


def classify_radius(
    r: float,
    inner: float = DEFAULT_INNER_RADIUS,
    outer: float = DEFAULT_OUTER_RADIUS,
) -> str:
    """Degradation regime by distance from the light source."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r < inner:
        return "overexposed"
    if r < outer:
        return "rain-dominated"
    return "lowlight-dominated"
