"""Command-line interface: dataset synthesis, training, evaluation, inference,
the illumination probe, and detail-image export.

A JSON config file (--config) mirrors TrainConfig / SynthesisRanges; any flag
given on the command line overrides the file. Set L2RIR_DETERMINISTIC=1 to
force deterministic torch kernels.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .imaging import compute_detail_image, load_gray, load_rgb, save_rgb
from .losses import LossWeights
from .metrics import NiqeModel, fit_niqe_model
from .probe import classify_radius, fit_inverse_square, rain_density_profile
from .synthesis import SynthesisRanges, build_dataset
from .train import PairedDataset, TrainConfig, evaluate, infer, train

log = logging.getLogger(__name__)


def _load_config_file(path) -> dict:
    return json.loads(Path(path).read_text()) if path else {}


def _merge(section: dict, args: argparse.Namespace, cls):
    """Dataclass from config-file section, overridden by explicitly set flags."""
    names = {f.name for f in fields(cls)}
    kwargs = {k: v for k, v in section.items() if k in names}
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            kwargs[name] = val
    return cls(**kwargs)


def cmd_synth(args) -> int:
    section = _load_config_file(args.config).get("synthesis", {})
    ranges = SynthesisRanges(**{
        k: tuple(v) if isinstance(v, list) else v for k, v in section.items()
    })
    manifest = build_dataset(
        args.src, args.out, ranges, split_ratio=args.split_ratio, seed=args.seed
    )
    print(
        f"wrote {manifest.count('train')} train / {manifest.count('test')} test pairs"
        f" to {args.out} ({manifest.skipped} unpaired sources skipped)"
    )
    return 0


def cmd_train(args) -> int:
    section = _load_config_file(args.config).get("train", {})
    weights = LossWeights(**section.pop("weights", {}))
    cfg = _merge(section, args, TrainConfig)
    cfg.weights = weights
    result = train(cfg)
    print(
        f"trained {len(result.log_rows)} steps; "
        f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f}; "
        f"checkpoint at {result.checkpoint}"
    )
    return 0


def cmd_eval(args) -> int:
    if args.llr_dir:
        dataset = PairedDataset.from_dirs(args.llr_dir, args.gt_dir)
    else:
        dataset = PairedDataset.from_manifest(args.data_dir, args.split)
    metric_names = tuple(args.metrics.split(","))
    niqe_model = NiqeModel.load(args.niqe_model) if args.niqe_model else None
    report = evaluate(
        args.checkpoint,
        dataset,
        metric_names,
        niqe_model=niqe_model,
        runtime_size=args.runtime_size,
        psnr_mode=args.psnr_mode,
    )
    report.save(args.out)
    print(json.dumps(report.means, indent=2))
    print(f"params: {report.param_count_m:.2f} M  runtime: {report.runtime_ms} ms")
    return 0


def cmd_infer(args) -> int:
    written = infer(args.checkpoint, args.input, args.out)
    print(f"restored {len(written)} images into {args.out}")
    return 0


def cmd_probe(args) -> int:
    img = load_rgb(args.image)
    center = (args.center_x, args.center_y)
    profile = fit_inverse_square(img, center)
    rain = None
    if args.rain_mask:
        rain = rain_density_profile(load_gray(args.rain_mask), center, args.patch_size)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    density = dict(rain.samples) if rain else {}
    with open(out / "profile.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "E", "m"])
        for r, e in profile.samples:
            writer.writerow([r, e, density.get(r, "")])
        for r, m in density.items():
            if not any(abs(r - pr) < 1e-9 for pr, _ in profile.samples):
                writer.writerow([r, "", m])
    summary = {
        "E0": profile.e0,
        "residual": profile.residual,
        "point_source": profile.point_source,
        "breakpoints": [args.inner, args.outer],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    print("regime at r=center+1:", classify_radius(1.0, args.inner, args.outer))
    return 0


def cmd_detail(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(Path(args.input).glob("*.png"))
    if not paths:
        raise SystemExit(f"no PNG images in {args.input}")
    for p in paths:
        save_rgb(compute_detail_image(load_rgb(p)), out / p.name)
    print(f"wrote {len(paths)} detail images to {out}")
    return 0


def cmd_fit_niqe(args) -> int:
    paths = sorted(Path(args.input).glob("*.png"))
    if len(paths) < 2:
        raise SystemExit(f"need at least 2 pristine images in {args.input}")
    model = fit_niqe_model((load_rgb(p) for p in paths), patch_size=args.patch_size)
    model.save(args.out)
    print(f"fitted NIQE model from {len(paths)} images -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l2rir")
    parser.add_argument("--config", help="JSON config file", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build a paired low-light-rainy dataset")
    p.add_argument("--src", required=True, help="dir of <id>_rain.png / <id>_gt.png")
    p.add_argument("--out", required=True)
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a restoration model")
    for f in fields(TrainConfig):
        if f.name == "weights":
            continue
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None,
                       type=_flag_type(f))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-dir", default=None, help="dataset dir with manifest.json")
    p.add_argument("--split", default="test")
    p.add_argument("--llr-dir", default=None, help="bare input dir (instead of manifest)")
    p.add_argument("--gt-dir", default=None)
    p.add_argument("--metrics", default="psnr,ssim")
    p.add_argument("--niqe-model", default=None)
    p.add_argument("--psnr-mode", default="rgb-joint", choices=["rgb-joint", "y-channel"])
    p.add_argument("--runtime-size", type=int, default=512)
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="restore a directory of images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("probe", help="light falloff + rain density diagnostics")
    p.add_argument("--image", required=True)
    p.add_argument("--center-x", type=float, required=True)
    p.add_argument("--center-y", type=float, required=True)
    p.add_argument("--rain-mask", default=None)
    p.add_argument("--patch-size", type=int, default=20)
    p.add_argument("--inner", type=float, default=200.0)
    p.add_argument("--outer", type=float, default=900.0)
    p.add_argument("--out", default="probe_out")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("detail", help="emit detail images")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detail)

    p = sub.add_parser("fit-niqe", help="fit a pristine NIQE model from clean images")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.set_defaults(func=cmd_fit_niqe)

    return parser


def _flag_type(f):
    mapping = {"int": int, "float": float, "str": str, "bool": _parse_bool,
               "int | None": int, "str | None": str}
    return mapping.get(str(f.type), str)


def _parse_bool(s: str) -> bool:
    return s.lower() in ("1", "true", "yes")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if os.environ.get("L2RIR_DETERMINISTIC") == "1":
        import torch

        torch.use_deterministic_algorithms(True)
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
