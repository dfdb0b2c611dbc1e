"""Restoration network: U-Net whose decoder is conditioned on the degradation
latent pyramid, front-ended by the Fourier detail-guidance module. Also defines
the full two-network model and its ablation variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from .ffr import FFRConfig, FFRDetailGuidance, detail_image
from .pnet import PNet, PNetConfig, Upsample, conv_block

VARIANTS = ("V1", "V2", "V3", "V4")


@dataclass
class RNetConfig:
    base_channels: int = 16
    depth: int = 3
    latent_injection: str = "concat"  # or "affine"
    ffr: FFRConfig = field(default_factory=FFRConfig)
    use_ffr: bool = True
    # channel widths of the incoming latent pyramid, coarse-to-fine; empty
    # means no latent guidance (all-zero pyramid)
    latent_channels: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.latent_injection not in ("concat", "affine"):
            raise ValueError(f"unknown latent_injection {self.latent_injection!r}")
        if self.latent_channels and len(self.latent_channels) != self.depth:
            raise ValueError("latent pyramid must supply one level per scale")

    def encoder_channels(self) -> list[int]:
        return [self.base_channels * 2**i for i in range(self.depth)]


class LatentInjector(nn.Module):
    """Fuses one latent level into decoder features, by channel concat + 1x1 conv
    or by latent-predicted per-channel scale/shift."""

    def __init__(self, feat_channels: int, latent_channels: int, mode: str):
        super().__init__()
        self.mode = mode
        if mode == "concat":
            self.fuse = nn.Conv2d(feat_channels + latent_channels, feat_channels, 1)
        else:
            self.fuse = nn.Conv2d(latent_channels, 2 * feat_channels, 1)

    def forward(self, feat: torch.Tensor, latent: torch.Tensor) -> torch.Tensor:
        if latent.shape[-2:] != feat.shape[-2:]:
            raise ValueError(
                f"latent spatial {tuple(latent.shape[-2:])} does not match "
                f"decoder scale {tuple(feat.shape[-2:])}"
            )
        if self.mode == "concat":
            return self.fuse(torch.cat([feat, latent], dim=1))
        scale, shift = self.fuse(latent).chunk(2, dim=1)
        return feat * (1.0 + scale) + shift


class RNet(nn.Module):
    def __init__(self, cfg: RNetConfig):
        super().__init__()
        self.cfg = cfg
        chans = cfg.encoder_channels()
        self.ffr_dg = FFRDetailGuidance(cfg.ffr, bypass=not cfg.use_ffr)
        # encoder consumes the guidance features concatenated with the raw image
        self.enc_blocks = nn.ModuleList()
        self.downs = nn.ModuleList()
        c_prev = cfg.ffr.channels + 3
        for i, c in enumerate(chans):
            self.enc_blocks.append(conv_block(c_prev, c))
            if i < cfg.depth - 1:
                self.downs.append(nn.Conv2d(c, c, 3, stride=2, padding=1))
            c_prev = c

        dec_chans = list(reversed(chans))
        lat_chans = cfg.latent_channels or [0] * cfg.depth
        self.bottleneck_inject = (
            LatentInjector(dec_chans[0], lat_chans[0], cfg.latent_injection)
            if lat_chans[0]
            else None
        )
        self.ups = nn.ModuleList()
        self.dec_blocks = nn.ModuleList()
        self.injectors = nn.ModuleList()
        for i in range(cfg.depth - 1):
            self.ups.append(Upsample(dec_chans[i], dec_chans[i + 1]))
            self.dec_blocks.append(conv_block(dec_chans[i + 1] * 2, dec_chans[i + 1]))
            self.injectors.append(
                LatentInjector(dec_chans[i + 1], lat_chans[i + 1], cfg.latent_injection)
                if lat_chans[i + 1]
                else None
            )
        self.head = nn.Conv2d(dec_chans[-1], 3, 3, padding=1)

    def check_input(self, x: torch.Tensor) -> None:
        div = 2 ** (self.cfg.depth - 1)
        if x.shape[-1] % div or x.shape[-2] % div:
            raise ValueError(
                f"spatial dims {tuple(x.shape[-2:])} must be divisible by {div}"
            )

    def forward(
        self,
        llr: torch.Tensor,
        latents: list[torch.Tensor] | None = None,
        return_aux: bool = False,
    ):
        self.check_input(llr)
        if latents is not None and self.cfg.latent_channels:
            if len(latents) != self.cfg.depth:
                raise ValueError(
                    f"expected {self.cfg.depth} latent levels, got {len(latents)}"
                )
        guided = self.ffr_dg(llr, detail_image(llr))
        feat = torch.cat([guided, llr], dim=1)

        skips = []
        for i, block in enumerate(self.enc_blocks):
            feat = block(feat)
            if i < self.cfg.depth - 1:
                skips.append(feat)
                feat = self.downs[i](feat)

        if self.bottleneck_inject is not None and latents is not None:
            feat = self.bottleneck_inject(feat, latents[0])
        for i in range(self.cfg.depth - 1):
            feat = self.dec_blocks[i](
                torch.cat([self.ups[i](feat), skips[-(i + 1)]], dim=1)
            )
            if self.injectors[i] is not None and latents is not None:
                feat = self.injectors[i](feat, latents[i + 1])

        # global residual keeps identity reachable at init; clamp to valid range
        restored = torch.clamp(llr + self.head(feat), 0.0, 1.0)
        if return_aux:
            return restored, guided
        return restored


@dataclass
class ModelConfig:
    """One switch per ablation variant:

    V1: restorer alone (no degradation net, guidance bypassed)
    V2: + single-branch degradation net (raw image input, no region split)
    V3: + pairwise degradation net (dark/light split)
    V4: V3 + Fourier detail guidance (the full model)
    """

    variant: str = "V4"
    pnet: PNetConfig = field(default_factory=PNetConfig)
    rnet: RNetConfig = field(default_factory=RNetConfig)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.pnet.depth != self.rnet.depth:
            raise ValueError("degradation and restoration depths must match")
        self.pnet.pairwise = self.variant in ("V3", "V4")
        self.rnet.use_ffr = self.variant == "V4"
        if self.has_pnet:
            self.rnet.latent_channels = self.pnet.latent_channels()
        else:
            self.rnet.latent_channels = []

    @property
    def has_pnet(self) -> bool:
        return self.variant != "V1"


class L2RIRNet(nn.Module):
    """Full restoration model: degradation embedding network guiding a U-Net restorer."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.pnet = PNet(cfg.pnet) if cfg.has_pnet else None
        self.rnet = RNet(cfg.rnet)

    def embed(self, x: torch.Tensor):
        if self.pnet is None:
            return None, None
        return self.pnet(x)

    def forward(self, x: torch.Tensor):
        """Returns (restored batch, degradation vectors or None)."""
        vec, latents = self.embed(x)
        return self.rnet(x, latents), vec

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
