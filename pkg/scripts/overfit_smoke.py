#!/usr/bin/env python3
"""Run the toy overfit experiment for every ablation variant: 8 images at
64x64, 200 steps, shared seed. Prints final loss and train-set PSNR gain per
variant, the directional analogue of the full-scale ablation table.

    python3 scripts/overfit_smoke.py --work /tmp/smoke
"""

import argparse
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from l2rir.metrics import psnr
from l2rir.train import PairedDataset, TrainConfig, load_checkpoint, restore_image, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--work", required=True)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    work = Path(args.work)
    subprocess.run(
        [
            sys.executable,
            str(Path(__file__).parent / "make_toy_dataset.py"),
            "--out", str(work), "--n", "8", "--size", "64",
            "--seed", str(args.seed), "--split-ratio", "1.0",
        ],
        check=True,
    )
    dataset = PairedDataset.from_manifest(work / "ds", "train")

    for variant in ("V1", "V2", "V3", "V4"):
        t0 = time.time()
        result = train(
            TrainConfig(
                variant=variant,
                steps=args.steps,
                batch_size=4,
                crop=64,
                lr_init=1e-3,
                lr_final=1e-4,
                seed=args.seed,
                data_dir=str(work / "ds"),
                out_dir=str(work / f"run_{variant}"),
            )
        )
        model = load_checkpoint(result.checkpoint)
        gains = []
        for i in range(len(dataset)):
            llr, gt = dataset.load(i)
            gains.append(psnr(restore_image(model, llr), gt) - psnr(llr, gt))
        print(
            f"{variant}: loss {result.initial_loss:.3f} -> {result.final_loss:.3f}, "
            f"train PSNR gain {np.mean(gains):+.2f} dB  ({time.time() - t0:.0f}s)"
        )


if __name__ == "__main__":
    main()
