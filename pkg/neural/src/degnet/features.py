"""Frozen deep-feature extractor: VGG-19 topology evaluated at relu5_4.

Weights come from torchvision's pretrained VGG-19 when that download is
available; otherwise (offline environments) the same topology is built
with a seeded Kaiming initialization. Either way the extractor is frozen:
its parameters are never part of any optimizer and never change.

``width_scale`` shrinks every layer proportionally for CPU-scale test
runs; 1.0 is the published topology.
"""

from __future__ import annotations

import logging

import torch
from torch import nn

log = logging.getLogger(__name__)

# conv counts per stage and output channels, through conv5_4 + relu.
_STAGES = ((2, 64), (2, 128), (4, 256), (4, 512), (4, 512))

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


def _build_topology(width_scale: float) -> tuple[nn.Sequential, int]:
    layers: list[nn.Module] = []
    in_ch = 3
    out_ch = 0
    for stage_idx, (convs, channels) in enumerate(_STAGES):
        out_ch = max(int(round(channels * width_scale)), 8)
        for _ in range(convs):
            layers.append(nn.Conv2d(in_ch, out_ch, 3, padding=1))
            layers.append(nn.ReLU(inplace=True))
            in_ch = out_ch
        if stage_idx < len(_STAGES) - 1:
            layers.append(nn.MaxPool2d(2))
    # Ends at relu5_4: the last ReLU of stage 5, before any fifth pooling.
    return nn.Sequential(*layers), out_ch


def _try_pretrained(net: nn.Sequential) -> bool:
    try:
        from torchvision.models import VGG19_Weights, vgg19

        reference = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).features
    except Exception as exc:  # no torchvision or no network access
        log.warning("pretrained weights unavailable (%s); using seeded init", exc)
        return False
    ref_convs = [m for m in reference if isinstance(m, nn.Conv2d)]
    own_convs = [m for m in net if isinstance(m, nn.Conv2d)]
    with torch.no_grad():
        for own, ref in zip(own_convs, ref_convs):
            own.weight.copy_(ref.weight)
            own.bias.copy_(ref.bias)
    return True


class FeatureExtractor(nn.Module):
    """phi: images in [0, 1] -> relu5_4 feature maps. Frozen."""

    def __init__(self, width_scale: float = 1.0, seed: int = 0, pretrained: bool = True):
        super().__init__()
        self.net, self.out_channels = _build_topology(width_scale)
        loaded = False
        if pretrained and width_scale == 1.0:
            loaded = _try_pretrained(self.net)
        if not loaded:
            gen = torch.Generator().manual_seed(seed)
            with torch.no_grad():
                for m in self.net:
                    if isinstance(m, nn.Conv2d):
                        w = torch.empty_like(m.weight)
                        nn.init.kaiming_normal_(w, generator=gen)
                        m.weight.copy_(w)
                        m.bias.zero_()
        self.register_buffer("mean", torch.tensor(_IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(_IMAGENET_STD).view(1, 3, 1, 1))
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def train(self, mode: bool = True):  # noqa: ARG002 - always stays frozen
        return super().train(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if min(x.shape[2], x.shape[3]) < 16:
            raise ValueError(f"input {x.shape[2]}x{x.shape[3]} too small for relu5_4")
        return self.net((x - self.mean) / self.std)
