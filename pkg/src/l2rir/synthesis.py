"""Paired low-light-rainy dataset synthesis: gamma/gain darkening, local light
patches with cosine falloff, and a deterministic dataset builder with a JSON manifest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imaging import load_rgb, save_rgb, validate_rgb

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1


@dataclass
class SynthesisParams:
    """Concrete per-image degradation parameters."""

    darken_gamma: float = 2.0
    darken_gain: float = 0.5
    n_light_patches: int = 1
    patch_radius_range: tuple[float, float] = (8.0, 24.0)
    patch_boost: float = 2.0
    global_dim: float = 0.85
    noise_sigma: float = 0.0
    seed: int = 0

    def validate(self) -> "SynthesisParams":
        if self.darken_gamma <= 0:
            raise ValueError("darken_gamma must be > 0")
        if not 0 < self.darken_gain <= 1:
            raise ValueError("darken_gain must be in (0, 1]")
        if self.n_light_patches < 0:
            raise ValueError("n_light_patches must be >= 0")
        if self.patch_boost < 1:
            raise ValueError("patch_boost must be >= 1")
        if not 0 < self.global_dim <= 1:
            raise ValueError("global_dim must be in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        return self


@dataclass
class SynthesisRanges:
    """Per-image sampling ranges used by the dataset builder."""

    gamma: tuple[float, float] = (1.5, 3.0)
    gain: tuple[float, float] = (0.3, 0.6)
    n_light_patches: tuple[int, int] = (0, 2)  # inclusive
    boost: tuple[float, float] = (1.5, 3.0)
    global_dim: tuple[float, float] = (0.7, 1.0)
    patch_radius: tuple[float, float] = (8.0, 24.0)
    noise_sigma: float = 0.0

    def sample(self, rng: np.random.Generator, seed: int) -> SynthesisParams:
        return SynthesisParams(
            darken_gamma=float(rng.uniform(*self.gamma)),
            darken_gain=float(rng.uniform(*self.gain)),
            n_light_patches=int(rng.integers(self.n_light_patches[0], self.n_light_patches[1] + 1)),
            patch_radius_range=self.patch_radius,
            patch_boost=float(rng.uniform(*self.boost)),
            global_dim=float(rng.uniform(*self.global_dim)),
            noise_sigma=self.noise_sigma,
            seed=seed,
        ).validate()


def darken(img: np.ndarray, gamma: float, gain: float) -> np.ndarray:
    """out = gain * img**gamma, clipped to [0, 1]."""
    img = validate_rgb(img)
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if not 0 < gain <= 1:
        raise ValueError("gain must be in (0, 1]")
    return np.clip(gain * img**gamma, 0.0, 1.0)


def add_light_patches(
    img: np.ndarray, params: SynthesisParams, rng: np.random.Generator
) -> np.ndarray:
    """Boost random disk regions (cosine falloff up to patch_boost at the center)
    and dim everything else by global_dim. Deterministic given the generator state.
    """
    img = validate_rgb(img)
    params.validate()
    h, w = img.shape[:2]
    factor = np.full((h, w), params.global_dim)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    for _ in range(params.n_light_patches):
        cx = rng.uniform(0, w - 1)
        cy = rng.uniform(0, h - 1)
        radius = rng.uniform(*params.patch_radius_range)
        d = np.hypot(xs - cx, ys - cy)
        # cosine falloff: patch_boost at the center, global_dim at the rim
        blend = 0.5 * (1.0 + np.cos(np.pi * np.clip(d / radius, 0.0, 1.0)))
        patch = params.global_dim + (params.patch_boost - params.global_dim) * blend
        factor = np.where(d < radius, np.maximum(factor, patch), factor)
    out = img * factor[..., None]
    if params.noise_sigma > 0:
        out = out + rng.normal(0.0, params.noise_sigma, size=out.shape)
    return np.clip(out, 0.0, 1.0)


def synthesize_pair(
    rainy: np.ndarray,
    clean: np.ndarray,
    params: SynthesisParams,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Low-light-rainy image from a rainy source; the clean target passes through."""
    rainy = validate_rgb(rainy)
    clean = validate_rgb(clean)
    if rainy.shape != clean.shape:
        raise ValueError(f"rainy {rainy.shape} and clean {clean.shape} shapes differ")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    llr = add_light_patches(
        darken(rainy, params.darken_gamma, params.darken_gain), params, rng
    )
    return llr, clean


@dataclass
class ManifestEntry:
    id: str
    llr: str
    gt: str
    split: str
    params: dict


@dataclass
class DatasetManifest:
    version: int = MANIFEST_VERSION
    seed: int = 0
    entries: list[ManifestEntry] = field(default_factory=list)
    skipped: int = 0

    def count(self, split: str) -> int:
        return sum(1 for e in self.entries if e.split == split)

    def save(self, path) -> None:
        payload = {
            "version": self.version,
            "seed": self.seed,
            "skipped": self.skipped,
            "entries": [asdict(e) for e in self.entries],
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        payload = json.loads(Path(path).read_text())
        return cls(
            version=payload["version"],
            seed=payload["seed"],
            skipped=payload.get("skipped", 0),
            entries=[ManifestEntry(**e) for e in payload["entries"]],
        )


def _image_rng(seed: int, image_id: str) -> np.random.Generator:
    # Per-image stream derived from (seed, id) so build order never matters
    digest = hashlib.sha256(image_id.encode()).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "big")])


def build_dataset(
    src_dir,
    out_dir,
    ranges: SynthesisRanges | None = None,
    split_ratio: float = 0.8,
    seed: int = 0,
) -> DatasetManifest:
    """Synthesize LLR/GT pairs from <id>_rain.png / <id>_gt.png sources.

    Writes out_dir/{train,test}/{llr,gt}/<id>.png plus manifest.json. Unpaired
    files are skipped with a warning. Fully deterministic given (seed, ranges).
    """
    src_dir, out_dir = Path(src_dir), Path(out_dir)
    ranges = ranges or SynthesisRanges()
    rain_files = {p.name[: -len("_rain.png")]: p for p in sorted(src_dir.glob("*_rain.png"))}
    gt_files = {p.name[: -len("_gt.png")]: p for p in sorted(src_dir.glob("*_gt.png"))}
    ids = sorted(rain_files.keys() & gt_files.keys())
    skipped = sorted((rain_files.keys() | gt_files.keys()) - set(ids))
    for sid in skipped:
        log.warning("unpaired source file for id %r, skipping", sid)
    if not ids:
        raise ValueError(f"no paired *_rain.png / *_gt.png files in {src_dir}")

    split_rng = np.random.default_rng(seed)
    order = list(split_rng.permutation(len(ids)))
    n_train = int(round(len(ids) * split_ratio))
    splits = {ids[k]: ("train" if i < n_train else "test") for i, k in enumerate(order)}

    manifest = DatasetManifest(seed=seed, skipped=len(skipped))
    for split in ("train", "test"):
        for sub in ("llr", "gt"):
            (out_dir / split / sub).mkdir(parents=True, exist_ok=True)

    for image_id in ids:
        rng = _image_rng(seed, image_id)
        params = ranges.sample(rng, seed)
        rainy = load_rgb(rain_files[image_id])
        clean = load_rgb(gt_files[image_id])
        llr, _ = synthesize_pair(rainy, clean, params, rng)
        split = splits[image_id]
        llr_path = out_dir / split / "llr" / f"{image_id}.png"
        gt_path = out_dir / split / "gt" / f"{image_id}.png"
        save_rgb(llr, llr_path)
        # gt passes through untouched; copy bytes so the file stays hash-equal
        shutil.copyfile(gt_files[image_id], gt_path)
        manifest.entries.append(
            ManifestEntry(
                id=image_id,
                llr=str(llr_path.relative_to(out_dir)),
                gt=str(gt_path.relative_to(out_dir)),
                split=split,
                # JSON-normalized so a saved/loaded manifest compares equal
                params=json.loads(json.dumps(asdict(params))),
            )
        )

    manifest.save(out_dir / "manifest.json")
    return manifest
