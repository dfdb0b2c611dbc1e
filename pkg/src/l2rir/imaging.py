"""Shared pixel-level operations: attention maps, region splits, detail images, PNG I/O.

Images are numpy float arrays in [0, 1]: RGB as (H, W, 3), gray maps as (H, W).
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image


def validate_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("RGB values must lie in [0, 1]")
    return img


def validate_gray(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected (H, W) gray map, got shape {m.shape}")
    if m.min() < 0.0 or m.max() > 1.0:
        raise ValueError("gray map values must lie in [0, 1]")
    return m


@dataclass
class RegionPair:
    """Dark/light decomposition of an image; `concatenated` stacks dark then light."""

    dark: np.ndarray   # (H, W, 3)
    light: np.ndarray  # (H, W, 3)

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.dark, self.light], axis=2)


def compute_attention_map(img: np.ndarray) -> np.ndarray:
    """Darkness attention: 1 minus the max channel, so dark pixels map near 1."""
    img = validate_rgb(img)
    return 1.0 - img.max(axis=2)


def split_regions(img: np.ndarray, amap: np.ndarray) -> RegionPair:
    """Weight the image by the attention map's complement (dark branch) and the map
    itself (light branch). The two branches sum back to the image exactly."""
    img = validate_rgb(img)
    amap = validate_gray(amap)
    if amap.shape != img.shape[:2]:
        raise ValueError(
            f"map shape {amap.shape} does not match image {img.shape[:2]}"
        )
    w = amap[..., None]
    return RegionPair(dark=img * (1.0 - w), light=img * w)


def compute_detail_image(img: np.ndarray) -> np.ndarray:
    """Per-pixel absolute inter-channel differences (|r-g|, |r-b|, |g-b|).

    Suppresses achromatic rain streaks while keeping chromatic texture.
    """
    img = validate_rgb(img)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    return np.stack([np.abs(r - g), np.abs(r - b), np.abs(g - b)], axis=2)


def luminance(img: np.ndarray) -> np.ndarray:
    """Plain channel mean; no gamma or color-space handling."""
    return validate_rgb(img).mean(axis=2)


# ---------------------------------------------------------------------------
# 8-bit PNG I/O; quantization is round(v*255), inverse byte/255, so round
# trips are bit-exact.
# ---------------------------------------------------------------------------

def to_bytes(img: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_bytes(data: np.ndarray) -> np.ndarray:
    return data.astype(np.float64) / 255.0


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return from_bytes(np.asarray(im.convert("RGB")))


def save_rgb(img: np.ndarray, path) -> None:
    Image.fromarray(to_bytes(validate_rgb(img)), mode="RGB").save(path, format="PNG")


def load_gray(path) -> np.ndarray:
    with Image.open(path) as im:
        return from_bytes(np.asarray(im.convert("L")))


def save_gray(m: np.ndarray, path) -> None:
    Image.fromarray(to_bytes(validate_gray(m)), mode="L").save(path, format="PNG")
