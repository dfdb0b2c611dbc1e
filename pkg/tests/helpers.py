"""Procedural test fixtures: smooth clean scenes and rain-streaked variants."""

import numpy as np

from l2rir.imaging import save_rgb


def make_clean(rng: np.random.Generator, h: int = 64, w: int = 64) -> np.ndarray:
    """Smooth multi-frequency field, vaguely scene-like, values in [0.05, 0.95]."""
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w, 3))
    for c in range(3):
        acc = np.zeros((h, w))
        for _ in range(4):
            fy, fx = rng.uniform(0.5, 4.0, size=2)
            py, px = rng.uniform(0, 2 * np.pi, size=2)
            acc += rng.uniform(0.2, 1.0) * np.sin(
                2 * np.pi * (fy * ys / h + fx * xs / w) + py + px
            )
        acc = (acc - acc.min()) / (acc.max() - acc.min() + 1e-12)
        img[..., c] = 0.05 + 0.9 * acc
    return img


def add_rain(img: np.ndarray, rng: np.random.Generator, n_streaks: int = 30) -> np.ndarray:
    """Overlay bright quasi-vertical streaks (achromatic, like rain)."""
    out = img.copy()
    h, w = img.shape[:2]
    for _ in range(n_streaks):
        x = rng.integers(0, w)
        y = rng.integers(0, h)
        length = int(rng.integers(4, max(5, h // 4)))
        slope = rng.uniform(-0.3, 0.3)
        strength = rng.uniform(0.2, 0.5)
        for t in range(length):
            yy = y + t
            xx = int(round(x + slope * t))
            if 0 <= yy < h and 0 <= xx < w:
                out[yy, xx] = np.clip(out[yy, xx] + strength, 0, 1)
    return out


def make_pair(rng: np.random.Generator, h: int = 64, w: int = 64):
    clean = make_clean(rng, h, w)
    return add_rain(clean, rng), clean


def write_source_pairs(src_dir, n: int, seed: int = 0, h: int = 64, w: int = 64):
    """Write <id>_rain.png / <id>_gt.png sources for the dataset builder."""
    src_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(n):
        rainy, clean = make_pair(rng, h, w)
        save_rgb(rainy, src_dir / f"img{i:03d}_rain.png")
        save_rgb(clean, src_dir / f"img{i:03d}_gt.png")
