"""Training loops for the two degradation synthesizers.

The upsampler trains on pixel MSE against the HR targets. The texture
generator trains adversarially with an image discriminator and a
feature discriminator over frozen deep features, combining the loss
subset selected by the degradation level. Both use Adam with momentum
0.9 and run for 20 epochs by default; checkpoints are written atomically.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .data import PairDataset, PatchSampler
from .features import FeatureExtractor
from .losses import (
    LossWeights,
    adv_losses,
    feature_adv_losses,
    level_losses,
    mse_loss,
    perceptual_loss,
    style_loss,
)
from .models import (
    FeatureDiscriminator,
    Generator,
    ImageDiscriminator,
    TextureNetConfig,
    UpNetConfig,
)

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9  # Adam momentum parameter


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    steps_per_epoch: int = 100
    batch_size: int = 4
    lr_patch: int = 24
    scale: int = 4
    learning_rate: float = 1e-4
    seed: int = 0
    feature_channels: int = 64
    extractor_width: float = 1.0


def save_checkpoint(state: dict, path: str | Path) -> None:
    """Write-temp-rename so a crash never leaves a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    torch.save(state, tmp)
    os.replace(tmp, path)


def train_upnet(
    manifest_path: str | Path,
    out_dir: str | Path,
    cfg: TrainConfig | None = None,
    total_steps: int | None = None,
) -> dict:
    """MSE-train the x4 upsampler; returns {checkpoint, losses}."""
    cfg = cfg or TrainConfig()
    out_dir = Path(out_dir)
    torch.manual_seed(cfg.seed)
    dataset = PairDataset(manifest_path)
    sampler = PatchSampler(dataset, cfg.lr_patch, cfg.scale, cfg.batch_size, cfg.seed)
    model = Generator(UpNetConfig(feature_channels=cfg.feature_channels))
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, betas=(ADAM_BETA1, 0.999))

    steps = total_steps if total_steps is not None else cfg.epochs * cfg.steps_per_epoch
    losses = []
    model.train()
    for step in range(steps):
        lr_b, hr_b = sampler.next_batch()
        opt.zero_grad()
        loss = mse_loss(model(lr_b), hr_b)
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
        if step % 50 == 0:
            log.info("upsampler step %d: mse %.5f", step, losses[-1])

    ckpt_path = out_dir / "upnet.pt"
    save_checkpoint(
        {"model": model.state_dict(), "config": vars(cfg), "kind": "upnet"}, ckpt_path
    )
    (out_dir / "upnet_losses.json").write_text(json.dumps(losses) + "\n")
    return {"checkpoint": ckpt_path, "losses": losses, "model": model}


def load_generator(ckpt_path: str | Path) -> Generator:
    state = torch.load(ckpt_path, map_location="cpu", weights_only=False)
    cfg_d = state.get("config", {})
    base = UpNetConfig(feature_channels=cfg_d.get("feature_channels", 64))
    cfg = TextureNetConfig(**{**vars(base), "skip_adapters": True}) if state.get(
        "kind"
    ) == "texturenet" else base
    model = Generator(cfg)
    model.load_state_dict(state["model"])
    model.eval()
    return model


def _generator_objective(weights, terms):
    return sum(weights[k] * terms[k] for k in weights)


def train_texturenet(
    manifest_path: str | Path,
    out_dir: str | Path,
    level: int,
    weights: LossWeights | None = None,
    cfg: TrainConfig | None = None,
    total_steps: int | None = None,
    upnet_ckpt: str | Path | None = None,
    input_source: str = "upnet",
) -> dict:
    """Adversarially train the texture generator at one degradation level.

    ``input_source`` selects what the generator upsamples: the output of a
    trained upsampler re-downsampled ('upnet', needs ``upnet_ckpt``) or the
    manifest's bicubic LR images ('bicubic').
    """
    if input_source not in ("upnet", "bicubic"):
        raise ValueError(f"input_source must be 'upnet' or 'bicubic', got {input_source!r}")
    cfg = cfg or TrainConfig()
    out_dir = Path(out_dir)
    torch.manual_seed(cfg.seed + level)
    dataset = PairDataset(manifest_path)
    sampler = PatchSampler(dataset, cfg.lr_patch, cfg.scale, cfg.batch_size, cfg.seed + level)

    gen = Generator(TextureNetConfig(feature_channels=cfg.feature_channels))
    d_img = ImageDiscriminator()
    phi = FeatureExtractor(width_scale=cfg.extractor_width, seed=cfg.seed)
    d_feat = FeatureDiscriminator(feature_channels=phi.out_channels)
    upnet = None
    if input_source == "upnet":
        if upnet_ckpt is None:
            raise ValueError("input_source 'upnet' requires upnet_ckpt")
        upnet = load_generator(upnet_ckpt)

    betas = (ADAM_BETA1, 0.999)
    opt_g = torch.optim.Adam(gen.parameters(), lr=cfg.learning_rate, betas=betas)
    opt_d = torch.optim.Adam(
        list(d_img.parameters()) + list(d_feat.parameters()),
        lr=cfg.learning_rate,
        betas=betas,
    )
    active = level_losses(level, weights)
    eps = 1e-6
    steps = total_steps if total_steps is not None else cfg.epochs * cfg.steps_per_epoch
    history = {"g": [], "d": []}

    for step in range(steps):
        lr_b, hr_b = sampler.next_batch()
        if upnet is not None:
            with torch.no_grad():
                sr = upnet(lr_b).clamp(0.0, 1.0)
                # The upsampler's smooth output, brought back to LR size,
                # is the texture generator's input.
                lr_b = nn.functional.interpolate(
                    sr, scale_factor=1.0 / cfg.scale, mode="bicubic", antialias=True
                ).clamp(0.0, 1.0)
        fake = gen(lr_b).clamp(eps, 1.0 - eps)

        # Discriminator update.
        opt_d.zero_grad()
        p_real = d_img(hr_b).clamp(eps, 1.0 - eps)
        p_fake = d_img(fake.detach()).clamp(eps, 1.0 - eps)
        _, l_d_img = adv_losses(p_real, p_fake)
        f_real = d_feat(phi(hr_b)).clamp(eps, 1.0 - eps)
        f_fake = d_feat(phi(fake.detach())).clamp(eps, 1.0 - eps)
        _, l_d_feat = feature_adv_losses(f_real, f_fake)
        d_total = l_d_img + l_d_feat
        d_total.backward()
        opt_d.step()

        # Generator update with the level's loss subset.
        opt_g.zero_grad()
        terms = {}
        if "adv" in active:
            terms["adv"] = adv_losses(
                p_real.detach(), d_img(fake).clamp(eps, 1.0 - eps)
            )[0]
        if "fadv" in active:
            terms["fadv"] = feature_adv_losses(
                f_real.detach(), d_feat(phi(fake)).clamp(eps, 1.0 - eps)
            )[0]
        if "per" in active:
            terms["per"] = perceptual_loss(phi, hr_b, fake)
        if "sty" in active:
            terms["sty"] = style_loss(phi, hr_b, fake)
        g_total = _generator_objective(active, terms)
        g_total.backward()
        opt_g.step()

        history["g"].append(float(g_total.detach()))
        history["d"].append(float(d_total.detach()))
        if step % 50 == 0:
            log.info("texture step %d: g %.4f d %.4f", step, history["g"][-1], history["d"][-1])

    ckpt_path = out_dir / f"texturenet_level{level}.pt"
    save_checkpoint(
        {
            "model": gen.state_dict(),
            "config": vars(cfg),
            "kind": "texturenet",
            "level": level,
        },
        ckpt_path,
    )
    (out_dir / f"texturenet_level{level}_losses.json").write_text(json.dumps(history) + "\n")
    return {"checkpoint": ckpt_path, "history": history, "model": gen}
