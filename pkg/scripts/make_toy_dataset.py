#!/usr/bin/env python3
"""Generate a procedural toy source set (smooth scenes + synthetic rain streaks)
and build a paired low-light-rainy dataset from it. Useful for smoke tests and
demos when no real rain dataset is at hand.

    python3 scripts/make_toy_dataset.py --out toy_ds --n 16 --size 64
"""

import argparse
from pathlib import Path

import numpy as np

from l2rir.imaging import save_rgb
from l2rir.synthesis import build_dataset


def make_clean(rng, h, w):
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w, 3))
    for c in range(3):
        acc = np.zeros((h, w))
        for _ in range(4):
            fy, fx = rng.uniform(0.5, 4.0, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            acc += rng.uniform(0.2, 1.0) * np.sin(
                2 * np.pi * (fy * ys / h + fx * xs / w) + phase
            )
        acc = (acc - acc.min()) / (acc.max() - acc.min() + 1e-12)
        img[..., c] = 0.05 + 0.9 * acc
    return img


def add_rain(img, rng, n_streaks=30):
    out = img.copy()
    h, w = img.shape[:2]
    for _ in range(n_streaks):
        x, y = rng.integers(0, w), rng.integers(0, h)
        length = int(rng.integers(4, max(5, h // 4)))
        slope = rng.uniform(-0.3, 0.3)
        strength = rng.uniform(0.2, 0.5)
        for t in range(length):
            yy, xx = y + t, int(round(x + slope * t))
            if 0 <= yy < h and 0 <= xx < w:
                out[yy, xx] = np.clip(out[yy, xx] + strength, 0, 1)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--split-ratio", type=float, default=0.8)
    args = ap.parse_args()

    out = Path(args.out)
    src = out / "src"
    src.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.n):
        clean = make_clean(rng, args.size, args.size)
        save_rgb(add_rain(clean, rng), src / f"img{i:03d}_rain.png")
        save_rgb(clean, src / f"img{i:03d}_gt.png")

    manifest = build_dataset(src, out / "ds", split_ratio=args.split_ratio, seed=args.seed)
    print(
        f"{manifest.count('train')} train / {manifest.count('test')} test pairs in {out / 'ds'}"
    )


if __name__ == "__main__":
    main()
