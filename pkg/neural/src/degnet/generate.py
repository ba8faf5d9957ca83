"""Emit learned-degradation pairs in the shared manifest format.

The degraded image for each HR input is the generator's x4 upsampling of
its bicubic x4 downsampling, at the HR's own resolution. Files are named
after the HR basename so the dataset toolkit's evaluate command can
name-match them directly.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import torch
from torch import nn

from .data import load_image, save_image
from .manifest import Manifest, PairEntry
from .models import upnet_forward
from .train import load_generator

_SCALE = 4


def _degraded_output(model, hr: torch.Tensor) -> torch.Tensor:
    h, w = hr.shape[1], hr.shape[2]
    h4, w4 = (h // _SCALE) * _SCALE, (w // _SCALE) * _SCALE
    hr_c = hr[:, :h4, :w4]
    lr = nn.functional.interpolate(
        hr_c.unsqueeze(0), scale_factor=1.0 / _SCALE, mode="bicubic", antialias=True
    ).clamp(0.0, 1.0)
    return upnet_forward(model, lr).squeeze(0), hr_c


def _generate(
    manifest_path: str | Path,
    ckpt_path: str | Path,
    out_dir: str | Path,
    cls: str,
    level: int | None,
) -> Manifest:
    manifest_path = Path(manifest_path)
    src = Manifest.read(manifest_path)
    if not src.entries:
        raise ValueError("input manifest has no entries")
    model = load_generator(ckpt_path)
    if cls == "gan":
        state = torch.load(ckpt_path, map_location="cpu", weights_only=False)
        if state.get("kind") != "texturenet":
            raise ValueError("gan generation requires a texturenet checkpoint")
        if level is None:
            level = state.get("level")
    out_dir = Path(out_dir)
    (out_dir / "hr").mkdir(parents=True, exist_ok=True)
    (out_dir / "degraded").mkdir(parents=True, exist_ok=True)

    result = Manifest()
    for entry in src.entries:
        hr_src = manifest_path.parent / entry.hr
        name = Path(entry.hr).name
        hr = load_image(hr_src)
        degraded, hr_used = _degraded_output(model, hr)
        if hr_used.shape == hr.shape:
            shutil.copyfile(hr_src, out_dir / "hr" / name)
        else:  # HR was cropped to a multiple of the scale
            save_image(hr_used, out_dir / "hr" / name)
        save_image(degraded, out_dir / "degraded" / name)
        result.entries.append(
            PairEntry(
                hr=f"hr/{name}",
                lr=f"degraded/{name}",
                cls=cls,
                scale=_SCALE,
                level=level,
                provenance=f"{cls} degradation of {entry.hr}"
                + (f" level={level}" if level else ""),
            )
        )
    return result


def generate_cnn_degraded(manifest_path, ckpt_path, out_dir) -> Manifest:
    """Over-smooth upsampler outputs paired with their HR sources."""
    return _generate(manifest_path, ckpt_path, out_dir, "cnn", None)


def generate_gan_degraded(manifest_path, ckpt_path, out_dir, level: int | None = None) -> Manifest:
    """Texture-generator outputs at one degradation level."""
    return _generate(manifest_path, ckpt_path, out_dir, "gan", level)
