"""Training, evaluation, and inference orchestration: linear lr decay, the
three-stream contrastive step, checkpointing, metric reports, and padding
helpers for arbitrary inference sizes.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import metrics as M
from .ffr import FFRConfig
from .imaging import load_rgb, save_rgb
from .losses import FeaturePyramid, LossWeights, restoration_loss, total_loss
from .pnet import PNetConfig, augment, contrastive_loss
from .rnet import L2RIRNet, ModelConfig, RNetConfig
from .synthesis import DatasetManifest

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    # paper-scale preset: lr 2e-4 -> 1e-6, batch 24, crop 256, 200 epochs
    lr_init: float = 2e-4
    lr_final: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 4
    crop: int = 64
    epochs: int = 2
    steps: int | None = None  # overrides epochs when set (toy runs)
    variant: str = "V4"
    seed: int = 0
    base_channels: int = 16
    depth: int = 3
    embed_dim: int = 128
    mlp_hidden: int = 256
    ffr_channels: int = 16
    freeze_pnet: bool = False
    lr_schedule: str = "step"  # or "epoch"
    weights: LossWeights = field(default_factory=LossWeights)
    feature_seed: int = 0
    feature_weights_file: str | None = None
    data_dir: str = "."
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.lr_final > self.lr_init:
            raise ValueError("lr_final must not exceed lr_init")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.crop % 2 ** (self.depth - 1):
            raise ValueError("crop must be divisible by 2**(depth-1)")
        if self.lr_schedule not in ("step", "epoch"):
            raise ValueError("lr_schedule must be 'step' or 'epoch'")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            variant=self.variant,
            pnet=PNetConfig(
                base_channels=self.base_channels,
                depth=self.depth,
                embed_dim=self.embed_dim,
                mlp_hidden=self.mlp_hidden,
            ),
            rnet=RNetConfig(
                base_channels=self.base_channels,
                depth=self.depth,
                ffr=FFRConfig(channels=self.ffr_channels),
            ),
        )


def lr_at(step: int, total_steps: int, lr_init: float, lr_final: float) -> float:
    """Linear decay: lr(t) = lr_init + (lr_final - lr_init) * t / T."""
    if total_steps <= 0:
        return lr_init
    frac = step / total_steps
    return lr_init * (1.0 - frac) + lr_final * frac


# ---------------------------------------------------------------------------
# data access
# ---------------------------------------------------------------------------


def to_tensor(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1))).float()


def to_image(t: torch.Tensor) -> np.ndarray:
    return np.clip(t.detach().cpu().numpy().transpose(1, 2, 0), 0.0, 1.0)


class PairedDataset:
    """LLR/GT pairs resolved from a manifest (one split) or a bare directory pair."""

    def __init__(self, pairs: list[tuple[Path, Path | None]]):
        self.pairs = pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def load(self, i: int) -> tuple[np.ndarray, np.ndarray | None]:
        llr_path, gt_path = self.pairs[i]
        return load_rgb(llr_path), (load_rgb(gt_path) if gt_path else None)

    @classmethod
    def from_manifest(cls, data_dir, split: str) -> "PairedDataset":
        data_dir = Path(data_dir)
        manifest = DatasetManifest.load(data_dir / "manifest.json")
        pairs = [
            (data_dir / e.llr, data_dir / e.gt)
            for e in manifest.entries
            if e.split == split
        ]
        if not pairs:
            raise ValueError(f"manifest has no entries for split {split!r}")
        return cls(pairs)

    @classmethod
    def from_dirs(cls, llr_dir, gt_dir=None) -> "PairedDataset":
        llr_paths = sorted(Path(llr_dir).glob("*.png"))
        if not llr_paths:
            raise ValueError(f"no PNG files in {llr_dir}")
        if gt_dir is None:
            return cls([(p, None) for p in llr_paths])
        pairs = []
        for p in llr_paths:
            gt = Path(gt_dir) / p.name
            if not gt.exists():
                log.warning("no ground truth for %s, skipping", p.name)
                continue
            pairs.append((p, gt))
        return cls(pairs)


def random_crop_pair(
    llr: np.ndarray, gt: np.ndarray, crop: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    h, w = llr.shape[:2]
    if h < crop or w < crop:
        raise ValueError(f"image {w}x{h} smaller than crop {crop}")
    y = int(rng.integers(0, h - crop + 1))
    x = int(rng.integers(0, w - crop + 1))
    return llr[y : y + crop, x : x + crop], gt[y : y + crop, x : x + crop]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(model: L2RIRNet, path, extra: dict | None = None) -> None:
    """Archive of named parameter tensors plus the model config as JSON."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "config_json": json.dumps(asdict(model.cfg), sort_keys=True),
        "state_dict": model.state_dict(),
    }
    if extra:
        payload["extra"] = extra
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path) -> L2RIRNet:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    raw = json.loads(payload["config_json"])
    cfg = ModelConfig(
        variant=raw["variant"],
        pnet=PNetConfig(**raw["pnet"]),
        rnet=RNetConfig(
            base_channels=raw["rnet"]["base_channels"],
            depth=raw["rnet"]["depth"],
            latent_injection=raw["rnet"]["latent_injection"],
            ffr=FFRConfig(**raw["rnet"]["ffr"]),
            use_ffr=raw["rnet"]["use_ffr"],
            latent_channels=raw["rnet"]["latent_channels"],
        ),
    )
    model = L2RIRNet(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    checkpoint: Path
    log_rows: list[dict]

    @property
    def initial_loss(self) -> float:
        return self.log_rows[0]["loss"]

    @property
    def final_loss(self) -> float:
        return self.log_rows[-1]["loss"]


def train(cfg: TrainConfig, dataset: PairedDataset | None = None) -> TrainResult:
    torch.manual_seed(cfg.seed)
    if dataset is None:
        dataset = PairedDataset.from_manifest(cfg.data_dir, "train")

    model = L2RIRNet(cfg.model_config())
    model.train()
    fx = (
        FeaturePyramid.from_file(cfg.feature_weights_file)
        if cfg.feature_weights_file
        else FeaturePyramid.fixed_random(cfg.feature_seed)
    )
    params = (
        model.rnet.parameters() if cfg.freeze_pnet and model.pnet else model.parameters()
    )
    opt = torch.optim.Adam(params, lr=cfg.lr_init, betas=(cfg.beta1, cfg.beta2))

    steps_per_epoch = max(1, len(dataset) // cfg.batch_size)
    total_steps = cfg.steps if cfg.steps is not None else cfg.epochs * steps_per_epoch
    epochs = cfg.epochs if cfg.steps is None else max(1, -(-cfg.steps // steps_per_epoch))

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_rng = np.random.default_rng(cfg.seed)
    aug_gen = torch.Generator().manual_seed(cfg.seed)
    rows: list[dict] = []
    ckpt_path = out_dir / "checkpoint.pt"

    step = 0
    for epoch in range(epochs):
        # per-epoch seeded stream keeps data order reproducible
        epoch_rng = np.random.default_rng([cfg.seed, epoch])
        for _ in range(steps_per_epoch):
            if step >= total_steps:
                break
            sched_t = epoch * steps_per_epoch if cfg.lr_schedule == "epoch" else step
            lr = lr_at(sched_t, total_steps, cfg.lr_init, cfg.lr_final)
            for group in opt.param_groups:
                group["lr"] = lr

            idx = epoch_rng.integers(0, len(dataset), size=cfg.batch_size)
            xs, gts = [], []
            for i in idx:
                llr_img, gt_img = dataset.load(int(i))
                llr_img, gt_img = random_crop_pair(llr_img, gt_img, cfg.crop, epoch_rng)
                xs.append(to_tensor(llr_img))
                gts.append(to_tensor(gt_img))
            x = torch.stack(xs)
            gt = torch.stack(gts)

            if model.pnet is not None:
                x_aug = augment(x, aug_gen)
                vec, latents = model.pnet(x)
                vec_aug, _ = model.pnet(x_aug)
                vec_clean, _ = model.pnet(gt)
                l_p = contrastive_loss(vec, vec_aug, vec_clean, model.cfg.pnet.epsilon)
            else:
                latents = None
                l_p = x.new_zeros(())

            restored = model.rnet(x, latents)
            l_r = restoration_loss(restored, gt, fx, cfg.weights)
            loss = total_loss(l_p, l_r, cfg.weights)

            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at step {step}: "
                    f"L_P={float(l_p.detach()):.4g} L_R={float(l_r.detach()):.4g} lr={lr:.3g}"
                )

            opt.zero_grad()
            loss.backward()
            opt.step()

            rows.append(
                {
                    "step": step,
                    "epoch": epoch,
                    "l_p": float(l_p.detach()),
                    "l_r": float(l_r.detach()),
                    "loss": float(loss.detach()),
                    "lr": lr,
                }
            )
            step += 1
        save_checkpoint(model, ckpt_path, extra={"epoch": epoch, "step": step})
        if step >= total_steps:
            break

    save_checkpoint(model, ckpt_path, extra={"step": step})
    with open(out_dir / "train_log.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return TrainResult(checkpoint=ckpt_path, log_rows=rows)


# ---------------------------------------------------------------------------
# inference helpers
# ---------------------------------------------------------------------------


def pad_to_multiple(img: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    h, w = img.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="reflect")
    return img, (h, w)


@torch.no_grad()
def restore_image(model: L2RIRNet, img: np.ndarray) -> np.ndarray:
    model.eval()
    multiple = 2 ** (model.cfg.rnet.depth - 1)
    padded, (h, w) = pad_to_multiple(img, multiple)
    restored, _ = model(to_tensor(padded).unsqueeze(0))
    return to_image(restored[0])[:h, :w]


def infer(checkpoint, input_dir, output_dir) -> list[Path]:
    model = load_checkpoint(checkpoint)
    input_dir, output_dir = Path(input_dir), Path(output_dir)
    paths = sorted(p for p in input_dir.iterdir() if p.suffix.lower() == ".png")
    if not paths:
        raise ValueError(f"no PNG images in {input_dir}")
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for p in paths:
        try:
            img = load_rgb(p)
        except Exception as exc:  # unreadable file: skip, keep going
            log.warning("skipping unreadable %s: %s", p, exc)
            continue
        out = output_dir / p.name
        save_rgb(restore_image(model, img), out)
        written.append(out)
    return written


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class MetricsReport:
    rows: list[dict]
    means: dict
    runtime_ms: float | None
    param_count_m: float
    psnr_convention: str = "rgb-joint"

    def save(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "metrics.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0].keys()))
            writer.writeheader()
            writer.writerows(self.rows)
        summary = {
            "means": self.means,
            "runtime_ms": self.runtime_ms,
            "param_count_m": self.param_count_m,
            "psnr_convention": self.psnr_convention,
        }
        (out_dir / "metrics.json").write_text(json.dumps(summary, indent=2))


def psnr_y(a: np.ndarray, b: np.ndarray) -> float:
    from .imaging import luminance

    return M.psnr(luminance(a), luminance(b))


@torch.no_grad()
def measure_runtime(model: L2RIRNet, size: int = 512, runs: int = 10) -> float:
    """Median wall-clock milliseconds for one forward pass, after warmup."""
    model.eval()
    x = torch.rand(1, 3, size, size)
    model(x)  # warmup excluded
    times = []
    for _ in range(max(10, runs)):
        t0 = time.perf_counter()
        model(x)
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))


def evaluate(
    checkpoint,
    dataset: PairedDataset,
    metric_names: tuple[str, ...] = ("psnr", "ssim"),
    niqe_model: M.NiqeModel | None = None,
    runtime_size: int | None = 512,
    psnr_mode: str = "rgb-joint",
) -> MetricsReport:
    model = load_checkpoint(checkpoint)
    paired_metrics = {"psnr", "ssim"} & set(metric_names)
    if paired_metrics and any(gt is None for _, gt in dataset.pairs):
        raise ValueError("paired metrics requested on unpaired data")
    if "niqe" in metric_names and niqe_model is None:
        raise ValueError("NIQE requested without a pristine model file")

    log.info("PSNR convention: %s", psnr_mode)
    rows = []
    for i in range(len(dataset)):
        llr_img, gt_img = dataset.load(i)
        restored = restore_image(model, llr_img)
        row: dict = {"image": str(dataset.pairs[i][0].name)}
        if "psnr" in metric_names:
            row["psnr"] = (
                psnr_y(restored, gt_img)
                if psnr_mode == "y-channel"
                else M.psnr(restored, gt_img)
            )
        if "ssim" in metric_names:
            row["ssim"] = M.ssim(restored, gt_img)
        if "niqe" in metric_names:
            row["niqe"] = M.niqe(restored, niqe_model)
        rows.append(row)

    means = {
        k: float(np.mean([r[k] for r in rows]))
        for k in rows[0]
        if k != "image"
    }
    runtime = (
        measure_runtime(model, runtime_size) if runtime_size else None
    )
    return MetricsReport(
        rows=rows,
        means=means,
        runtime_ms=runtime,
        param_count_m=model.parameter_count() / 1e6,
        psnr_convention=psnr_mode,
    )
