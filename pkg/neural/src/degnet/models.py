"""Generator and discriminator networks.

The generator is a residual x4 upsampler: a 9x9 head convolution for
low-level features, 9 residual blocks without batch norm, a long-range
skip from the head to the pre-upsampling point, and two sub-pixel (pixel
shuffle) x2 stages. The texture variant adds a 1x1 adapter on every
long-range skip connection so the per-block contributions can be balanced.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class UpNetConfig:
    head_kernel: int = 9
    res_blocks: int = 9
    feature_channels: int = 64
    upsample_stages: int = 2  # two x2 sub-pixel stages -> net x4
    skip_adapters: bool = False  # 1x1 conv per long-range skip (texture variant)


@dataclass(frozen=True)
class TextureNetConfig(UpNetConfig):
    skip_adapters: bool = True


class ResidualBlock(nn.Module):
    """conv-relu-conv with identity shortcut; no batch norm."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


class SubPixelUp(nn.Module):
    """conv to 4x channels then pixel shuffle: learned x2 upsampling."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels * 4, 3, padding=1)
        self.shuffle = nn.PixelShuffle(2)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.act(self.shuffle(self.conv(x)))


class Generator(nn.Module):
    """Residual x4 upsampler; ``upnet_forward`` wraps its inference use."""

    def __init__(self, cfg: UpNetConfig | None = None):
        super().__init__()
        self.cfg = cfg or UpNetConfig()
        c = self.cfg.feature_channels
        pad = self.cfg.head_kernel // 2
        self.head = nn.Conv2d(3, c, self.cfg.head_kernel, padding=pad)
        self.head_act = nn.ReLU(inplace=True)
        self.blocks = nn.ModuleList(ResidualBlock(c) for _ in range(self.cfg.res_blocks))
        if self.cfg.skip_adapters:
            # One 1x1 adapter per long-range skip (head + every block output).
            self.adapters = nn.ModuleList(
                nn.Conv2d(c, c, 1) for _ in range(self.cfg.res_blocks + 1)
            )
        else:
            self.adapters = None
        self.fuse = nn.Conv2d(c, c, 3, padding=1)
        self.up = nn.Sequential(*(SubPixelUp(c) for _ in range(self.cfg.upsample_stages)))
        self.tail = nn.Conv2d(c, 3, 3, padding=1)

    def forward(self, x):
        head = self.head_act(self.head(x))
        feat = head
        skips = [head]
        for block in self.blocks:
            feat = block(feat)
            skips.append(feat)
        body = self.fuse(feat)
        if self.adapters is not None:
            for adapter, skip in zip(self.adapters, skips):
                body = body + adapter(skip)
        else:
            body = body + head  # single identity long-range skip
        return self.tail(self.up(body))


def upnet_forward(model: Generator, lr: torch.Tensor) -> torch.Tensor:
    """x4 upsampling inference; input (n, 3, h, w) with h, w >= 16."""
    if lr.dim() != 4 or lr.shape[1] != 3:
        raise ValueError(f"expected (n, 3, h, w) input, got {tuple(lr.shape)}")
    if min(lr.shape[2], lr.shape[3]) < 16:
        raise ValueError(f"input {lr.shape[2]}x{lr.shape[3]} below the 16 px minimum")
    with torch.no_grad():
        return model(lr).clamp(0.0, 1.0)


class ImageDiscriminator(nn.Module):
    """Strided-convolution classifier over rasters; sigmoid probability."""

    def __init__(self, base_channels: int = 32):
        super().__init__()
        c = base_channels
        self.net = nn.Sequential(
            nn.Conv2d(3, c, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(c, 2 * c, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.AdaptiveAvgPool2d(1),
        )
        self.fc = nn.Linear(4 * c, 1)

    def forward(self, x):
        h = self.net(x).flatten(1)
        return torch.sigmoid(self.fc(h)).squeeze(1)


class FeatureDiscriminator(nn.Module):
    """Small MLP over spatially pooled deep-feature maps; sigmoid output."""

    def __init__(self, feature_channels: int = 512, hidden: int = 256):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(feature_channels, hidden),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, 1),
        )

    def forward(self, feat):
        pooled = feat.mean(dim=(2, 3))
        return torch.sigmoid(self.net(pooled)).squeeze(1)
