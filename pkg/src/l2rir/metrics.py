"""Full-reference (PSNR, SSIM) and no-reference (NIQE) image quality metrics.

PSNR is computed jointly over all channels against peak 1.0, capped at 100 dB.
SSIM uses an 11x11 Gaussian window (sigma 1.5) on the channel-mean luminance,
valid-window reduction. NIQE follows the standard natural-scene-statistics
recipe: MSCN coefficients, per-patch AGGD features at two scales, and a
Mahalanobis-type distance to a pristine multivariate-Gaussian model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.special import gamma as gamma_fn

from .imaging import luminance, validate_rgb

PSNR_CAP_DB = 100.0


def psnr(a: np.ndarray, b: np.ndarray, cap: float = PSNR_CAP_DB) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * np.log10(1.0 / mse))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray, k1: float = 0.01, k2: float = 0.03) -> float:
    a, b = validate_rgb(a), validate_rgb(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    x, y = luminance(a), luminance(b)
    if min(x.shape) < 11:
        raise ValueError("image too small for an 11x11 SSIM window")
    w = _gaussian_window()
    c1, c2 = k1**2, k2**2

    mu_x = signal.convolve2d(x, w, mode="valid")
    mu_y = signal.convolve2d(y, w, mode="valid")
    sxx = signal.convolve2d(x * x, w, mode="valid") - mu_x**2
    syy = signal.convolve2d(y * y, w, mode="valid") - mu_y**2
    sxy = signal.convolve2d(x * y, w, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


# ---------------------------------------------------------------------------
# NIQE
# ---------------------------------------------------------------------------

_GAM_GRID = np.arange(0.2, 10.001, 0.001)
_R_GAM = (gamma_fn(2.0 / _GAM_GRID) ** 2) / (
    gamma_fn(1.0 / _GAM_GRID) * gamma_fn(3.0 / _GAM_GRID)
)


def fit_aggd(x: np.ndarray) -> tuple[float, float, float]:
    """Moment-matched asymmetric generalized Gaussian fit: (alpha, sigma_l, sigma_r)."""
    x = x.ravel()
    left = x[x < 0]
    right = x[x >= 0]
    sigma_l = np.sqrt(np.mean(left**2)) if left.size else 0.0
    sigma_r = np.sqrt(np.mean(right**2)) if right.size else 0.0
    if sigma_l == 0.0 or sigma_r == 0.0:
        return 10.0, float(sigma_l), float(sigma_r)
    gamma_hat = sigma_l / sigma_r
    r_hat = np.mean(np.abs(x)) ** 2 / np.mean(x**2)
    r_hat_norm = (
        r_hat * (gamma_hat**3 + 1.0) * (gamma_hat + 1.0) / (gamma_hat**2 + 1.0) ** 2
    )
    alpha = _GAM_GRID[np.argmin((_R_GAM - r_hat_norm) ** 2)]
    return float(alpha), float(sigma_l), float(sigma_r)


def _mscn(gray: np.ndarray) -> np.ndarray:
    w = _gaussian_window(7, 7.0 / 6.0)
    mu = signal.convolve2d(gray, w, mode="same", boundary="symm")
    sigma = np.sqrt(
        np.abs(signal.convolve2d(gray * gray, w, mode="same", boundary="symm") - mu**2)
    )
    return (gray - mu) / (sigma + 1.0)

_SHIFTS = ((0, 1), (1, 0), (1, 1), (1, -1))  # H, V, D1, D2 neighbor products


def _patch_features(patch: np.ndarray) -> np.ndarray:
    feats = []
    alpha, sl, sr = fit_aggd(patch)
    feats += [alpha, (sl**2 + sr**2) / 2.0]
    for dy, dx in _SHIFTS:
        shifted = np.roll(np.roll(patch, dy, axis=0), dx, axis=1)
        alpha, sl, sr = fit_aggd((patch * shifted).ravel())
        eta = (sr - sl) * (gamma_fn(2.0 / alpha) / gamma_fn(1.0 / alpha))
        feats += [alpha, eta, sl**2, sr**2]
    return np.array(feats)


def niqe_features(img: np.ndarray, patch_size: int = 96) -> np.ndarray:
    """Per-patch NSS feature matrix (rows are patches, 36 columns: two scales)."""
    img = validate_rgb(img)
    gray = luminance(img) * 255.0
    h, w = gray.shape
    if h < patch_size or w < patch_size:
        raise ValueError(f"image must be at least {patch_size}x{patch_size}")
    h2, w2 = (h // patch_size) * patch_size, (w // patch_size) * patch_size
    gray = gray[:h2, :w2]
    # half-resolution copy for the second scale
    small = 0.25 * (gray[0::2, 0::2] + gray[1::2, 0::2] + gray[0::2, 1::2] + gray[1::2, 1::2])

    rows = []
    mscn1, mscn2 = _mscn(gray), _mscn(small)
    half = patch_size // 2
    for i in range(0, h2, patch_size):
        for j in range(0, w2, patch_size):
            f1 = _patch_features(mscn1[i : i + patch_size, j : j + patch_size])
            f2 = _patch_features(
                mscn2[i // 2 : i // 2 + half, j // 2 : j // 2 + half]
            )
            rows.append(np.concatenate([f1, f2]))
    return np.array(rows)


@dataclass
class NiqeModel:
    """Pristine MVG statistics for NIQE scoring."""

    patch_size: int
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def feature_dim(self) -> int:
        return self.mean.shape[0]

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "feature_dim": self.feature_dim,
                    "patch_size": self.patch_size,
                    "mean": self.mean.tolist(),
                    "covariance": self.covariance.tolist(),
                }
            )
        )

    @classmethod
    def load(cls, path) -> "NiqeModel":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"NIQE model file not found: {path}")
        payload = json.loads(path.read_text())
        return cls(
            patch_size=payload["patch_size"],
            mean=np.array(payload["mean"]),
            covariance=np.array(payload["covariance"]),
        )


def fit_niqe_model(images, patch_size: int = 96) -> NiqeModel:
    """Fit the pristine MVG model from an iterable of clean RGB images."""
    rows = [niqe_features(img, patch_size) for img in images]
    feats = np.vstack(rows)
    if feats.shape[0] < 2:
        raise ValueError("need at least two patches to fit a covariance")
    return NiqeModel(
        patch_size=patch_size,
        mean=feats.mean(axis=0),
        covariance=np.cov(feats, rowvar=False),
    )


def niqe(img: np.ndarray, model: NiqeModel) -> float:
    """Lower is better; distance of the image's NSS statistics from pristine."""
    feats = niqe_features(img, model.patch_size)
    mean_t = feats.mean(axis=0)
    cov_t = (
        np.cov(feats, rowvar=False)
        if feats.shape[0] > 1
        else np.zeros_like(model.covariance)
    )
    diff = model.mean - mean_t
    pooled = np.linalg.pinv((model.covariance + cov_t) / 2.0)
    return float(np.sqrt(max(0.0, diff @ pooled @ diff)))
