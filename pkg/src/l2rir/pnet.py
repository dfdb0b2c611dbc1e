"""Pairwise degradation embedding network: a shared U-Net-style encoder over the
dark/light region split, an MLP projection head producing the degradation vector,
and a decoder emitting the latent pyramid that conditions the restorer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn


@dataclass
class PNetConfig:
    base_channels: int = 16
    depth: int = 3
    embed_dim: int = 128
    mlp_hidden: int = 256
    epsilon: float = 1e-6
    # pairwise mode feeds the 6-channel dark/light stack; single-branch feeds
    # the raw image (the S-Net ablation)
    pairwise: bool = True

    def __post_init__(self):
        if self.depth < 2:
            raise ValueError("depth must be >= 2")
        if min(self.base_channels, self.embed_dim, self.mlp_hidden) < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")

    @property
    def in_channels(self) -> int:
        return 6 if self.pairwise else 3

    def encoder_channels(self) -> list[int]:
        return [self.base_channels * 2**i for i in range(self.depth)]

    def latent_channels(self) -> list[int]:
        # level 0 is coarsest (bottleneck resolution), last is full resolution
        return list(reversed(self.encoder_channels()))


def attention_map(x: torch.Tensor) -> torch.Tensor:
    """Darkness weight per pixel: 1 - max channel. x is (N, 3, H, W)."""
    return 1.0 - x.max(dim=1, keepdim=True).values


def region_stack(x: torch.Tensor) -> torch.Tensor:
    """6-channel stack of the dark branch (x * (1-MAP)) and light branch (x * MAP)."""
    amap = attention_map(x)
    return torch.cat([x * (1.0 - amap), x * amap], dim=1)


def conv_block(c_in: int, c_out: int) -> nn.Sequential:
    # instance-style norm keeps outputs independent of batch composition
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1),
        nn.InstanceNorm2d(c_out, affine=True),
        nn.LeakyReLU(0.2, inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1),
        nn.InstanceNorm2d(c_out, affine=True),
        nn.LeakyReLU(0.2, inplace=True),
    )


class Upsample(nn.Module):
    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, 3, padding=1)

    def forward(self, x):
        return self.conv(nn.functional.interpolate(x, scale_factor=2, mode="nearest"))


class PNet(nn.Module):
    def __init__(self, cfg: PNetConfig):
        super().__init__()
        self.cfg = cfg
        chans = cfg.encoder_channels()
        self.enc_blocks = nn.ModuleList()
        self.downs = nn.ModuleList()
        c_prev = cfg.in_channels
        for i, c in enumerate(chans):
            self.enc_blocks.append(conv_block(c_prev, c))
            if i < cfg.depth - 1:
                self.downs.append(nn.Conv2d(c, c, 3, stride=2, padding=1))
            c_prev = c

        self.project = nn.Sequential(
            nn.Linear(chans[-1], cfg.mlp_hidden),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(cfg.mlp_hidden, cfg.embed_dim),
        )

        dec_chans = cfg.latent_channels()
        self.ups = nn.ModuleList()
        self.dec_blocks = nn.ModuleList()
        for i in range(cfg.depth - 1):
            self.ups.append(Upsample(dec_chans[i], dec_chans[i + 1]))
            # skip connection doubles the input channels
            self.dec_blocks.append(conv_block(dec_chans[i + 1] * 2, dec_chans[i + 1]))

    def check_input(self, x: torch.Tensor) -> None:
        div = 2 ** (self.cfg.depth - 1)
        if x.shape[-1] % div or x.shape[-2] % div:
            raise ValueError(
                f"spatial dims {tuple(x.shape[-2:])} must be divisible by {div}"
            )

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """Returns (degradation vectors (N, embed_dim), latent pyramid coarse-to-fine)."""
        self.check_input(x)
        feat = region_stack(x) if self.cfg.pairwise else x
        skips = []
        for i, block in enumerate(self.enc_blocks):
            feat = block(feat)
            if i < self.cfg.depth - 1:
                skips.append(feat)
                feat = self.downs[i](feat)

        vec = self.project(feat.mean(dim=(2, 3)))

        latents = [feat]
        for up, block, skip in zip(self.ups, self.dec_blocks, reversed(skips)):
            feat = block(torch.cat([up(feat), skip], dim=1))
            latents.append(feat)
        return vec, latents


def augment(x: torch.Tensor, rng: torch.Generator) -> torch.Tensor:
    """One of rot90/rot180/rot270/horizontal flip, chosen uniformly. (N, C, H, W)."""
    choice = int(torch.randint(0, 4, (1,), generator=rng).item())
    if choice < 3:
        return torch.rot90(x, k=choice + 1, dims=(-2, -1))
    return torch.flip(x, dims=(-1,))


def contrastive_loss(
    v: torch.Tensor,
    v_aug: torch.Tensor,
    v_clean: torch.Tensor,
    epsilon: float = 1e-6,
) -> torch.Tensor:
    """L1-distance ratio pulling v toward its augmentation and away from the clean
    embedding: ||v - v_aug||_1 / (||v - v_clean||_1 + epsilon), batch-averaged."""
    if not (v.shape == v_aug.shape == v_clean.shape):
        raise ValueError("embedding shapes must match")
    pos = (v - v_aug).abs().sum(dim=-1)
    neg = (v - v_clean).abs().sum(dim=-1)
    return (pos / (neg + epsilon)).mean()
