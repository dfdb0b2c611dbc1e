"""Restoration loss (L1 + perceptual), loss weighting, and the multi-scale
feature extractor backing the perceptual term.

The default extractor is a frozen 4-stage strided conv pyramid with weights
drawn from a fixed seed, so tests and training are hermetic; externally
supplied weights can be loaded for a pretrained backbone.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn


@dataclass
class LossWeights:
    lambda_p: float = 1.0
    lambda_r: float = 1.0
    lambda_per: float = 0.1

    def __post_init__(self):
        if min(self.lambda_p, self.lambda_r, self.lambda_per) < 0:
            raise ValueError("loss weights must be non-negative")


class FeaturePyramid(nn.Module):
    """Four conv stages with stride 2, tapped after each stage, so the four
    feature maps have strictly decreasing spatial size."""

    def __init__(self, base_channels: int = 16):
        super().__init__()
        chans = [3] + [base_channels * 2**i for i in range(4)]
        self.stages = nn.ModuleList(
            nn.Sequential(
                nn.Conv2d(chans[i], chans[i + 1], 3, stride=2, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            )
            for i in range(4)
        )
        for p in self.parameters():
            p.requires_grad_(False)

    @classmethod
    def fixed_random(cls, seed: int = 0, base_channels: int = 16) -> "FeaturePyramid":
        fx = cls(base_channels)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in fx.parameters():
                p.copy_(torch.randn(p.shape, generator=gen) * 0.2)
        return fx

    @classmethod
    def from_file(cls, path, base_channels: int = 16) -> "FeaturePyramid":
        fx = cls(base_channels)
        fx.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
        return fx

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        taps = []
        for stage in self.stages:
            x = stage(x)
            taps.append(x)
        return taps


def perceptual_loss(
    pred: torch.Tensor, gt: torch.Tensor, fx: FeaturePyramid
) -> torch.Tensor:
    """Sum over tap layers of the mean absolute feature difference."""
    total = pred.new_zeros(())
    for fp, fg in zip(fx(pred), fx(gt)):
        total = total + (fp - fg).abs().mean()
    return total


def restoration_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    fx: FeaturePyramid | None,
    weights: LossWeights,
) -> torch.Tensor:
    """Mean L1 plus lambda_per times the multi-scale perceptual term."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    loss = (pred - gt).abs().mean()
    if fx is not None and weights.lambda_per > 0:
        loss = loss + weights.lambda_per * perceptual_loss(pred, gt, fx)
    return loss


def total_loss(l_p, l_r, weights: LossWeights):
    return weights.lambda_p * l_p + weights.lambda_r * l_r
