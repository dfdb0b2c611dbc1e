"""Fourier-ResNet detail guidance: residual blocks that split channels into a
spatial 3x3-conv path and a spectral path (orthonormal FFT, 1x1 conv on stacked
real/imag parts, inverse FFT), plus the front-end that fuses detail-image
features with the degraded-image features by element-wise multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn


@dataclass
class FFRConfig:
    channels: int = 16
    n_blocks: int = 2
    spectral_fraction: float = 0.5
    tied_streams: bool = False

    def __post_init__(self):
        if not 0 < self.spectral_fraction < 1:
            raise ValueError("spectral_fraction must be in (0, 1)")
        n_spec = self.channels * self.spectral_fraction
        if abs(n_spec - round(n_spec)) > 1e-9:
            raise ValueError("channels * spectral_fraction must be an integer")

    @property
    def spectral_channels(self) -> int:
        return round(self.channels * self.spectral_fraction)

    @property
    def spatial_channels(self) -> int:
        return self.channels - self.spectral_channels


def detail_image(x: torch.Tensor) -> torch.Tensor:
    """(|r-g|, |r-b|, |g-b|) stack for an (N, 3, H, W) batch."""
    r, g, b = x[:, 0:1], x[:, 1:2], x[:, 2:3]
    return torch.cat([(r - g).abs(), (r - b).abs(), (g - b).abs()], dim=1)


def spatial_to_freq(x: torch.Tensor) -> torch.Tensor:
    """Orthonormal 2-D FFT with real/imag stacked along channels: (N,C,H,W) -> (N,2C,H,W)."""
    spec = torch.fft.fft2(x, dim=(-2, -1), norm="ortho")
    return torch.cat([spec.real, spec.imag], dim=1)


def freq_to_spatial(z: torch.Tensor) -> torch.Tensor:
    """Inverse of spatial_to_freq; returns the real part."""
    c = z.shape[1] // 2
    spec = torch.complex(z[:, :c], z[:, c:])
    return torch.fft.ifft2(spec, dim=(-2, -1), norm="ortho").real


class SpectralTransform(nn.Module):
    """FFT -> 1x1 conv (+ optional nonlinearity) on stacked real/imag -> inverse FFT."""

    def __init__(self, channels: int, activation: bool = True):
        super().__init__()
        self.conv = nn.Conv2d(2 * channels, 2 * channels, 1)
        self.activation = activation

    def init_identity(self) -> "SpectralTransform":
        """Set the frequency conv to a passthrough (for round-trip checks)."""
        with torch.no_grad():
            self.conv.weight.zero_()
            for i in range(self.conv.weight.shape[0]):
                self.conv.weight[i, i, 0, 0] = 1.0
            self.conv.bias.zero_()
        return self

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] % 2 or x.shape[-2] % 2:
            raise ValueError(f"spatial dims must be even, got {tuple(x.shape[-2:])}")
        z = self.conv(spatial_to_freq(x))
        if self.activation:
            z = nn.functional.leaky_relu(z, 0.2)
        return freq_to_spatial(z)


class FFRBlock(nn.Module):
    """Residual block with parallel spatial (3x3 convs) and spectral channel subsets."""

    def __init__(self, cfg: FFRConfig):
        super().__init__()
        self.cfg = cfg
        c_sp = cfg.spatial_channels
        self.spatial = nn.Sequential(
            nn.Conv2d(c_sp, c_sp, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(c_sp, c_sp, 3, padding=1),
        )
        self.spectral = SpectralTransform(cfg.spectral_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.cfg.channels:
            raise ValueError(
                f"expected {self.cfg.channels} channels, got {x.shape[1]}"
            )
        c_sp = self.cfg.spatial_channels
        out = torch.cat([self.spatial(x[:, :c_sp]), self.spectral(x[:, c_sp:])], dim=1)
        return x + out


class FFRDetailGuidance(nn.Module):
    """Front end of the restorer: embeds the degraded image and its detail image,
    runs each through FFR blocks, multiplies detail features into the image
    features, and projects the fused stack back to `channels`.

    With `bypass=True` the module degenerates to a plain conv embedding of the
    degraded image (the no-guidance ablation)."""

    def __init__(self, cfg: FFRConfig, bypass: bool = False):
        super().__init__()
        self.cfg = cfg
        self.bypass = bypass
        c = cfg.channels
        self.embed_llr = nn.Conv2d(3, c, 3, padding=1)
        if bypass:
            return
        self.embed_detail = nn.Conv2d(3, c, 3, padding=1)
        self.blocks_llr = nn.Sequential(*[FFRBlock(cfg) for _ in range(cfg.n_blocks)])
        self.blocks_detail = (
            self.blocks_llr
            if cfg.tied_streams
            else nn.Sequential(*[FFRBlock(cfg) for _ in range(cfg.n_blocks)])
        )
        self.project = nn.Conv2d(2 * c, c, 1)

    def forward(self, llr: torch.Tensor, detail: torch.Tensor) -> torch.Tensor:
        if llr.shape != detail.shape:
            raise ValueError(f"shape mismatch: {llr.shape} vs {detail.shape}")
        if self.bypass:
            return self.embed_llr(llr)
        llr_f = self.blocks_llr(self.embed_llr(llr))
        det_f = self.blocks_detail(self.embed_detail(detail))
        enhanced = det_f * llr_f
        return self.project(torch.cat([enhanced, llr_f], dim=1))
