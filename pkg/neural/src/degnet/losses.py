"""Training objectives: pixel MSE, the two adversarial pairs, perceptual
and style distances, and the per-level selection of generator terms."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .features import FeatureExtractor


@dataclass(frozen=True)
class LossWeights:
    w_adv: float = 1e-3
    w_fadv: float = 1.0
    w_per: float = 1e-3
    w_sty: float = 1.0


# Which generator terms are active at each degradation level.
LEVEL_TERMS = {
    1: ("adv", "fadv", "per", "sty"),
    2: ("adv", "fadv", "per"),
    3: ("adv", "fadv"),
}


def mse_loss(sr: torch.Tensor, hr: torch.Tensor) -> torch.Tensor:
    """Mean of squared differences."""
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {tuple(sr.shape)} vs {tuple(hr.shape)}")
    return torch.mean((sr - hr) ** 2)


def _check_prob(p: torch.Tensor, name: str) -> None:
    if torch.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")


def adv_losses(d_real: torch.Tensor, d_fake: torch.Tensor):
    """Generator and discriminator objectives from probability outputs.

    Returns (l_adv, l_d) with l_adv = -log D(fake) and
    l_d = -log D(real) - log(1 - D(fake)).
    """
    _check_prob(d_real, "D(real)")
    _check_prob(d_fake, "D(fake)")
    l_adv = -torch.log(d_fake).mean()
    l_d = (-torch.log(d_real) - torch.log(1.0 - d_fake)).mean()
    return l_adv, l_d


def feature_adv_losses(df_real: torch.Tensor, df_fake: torch.Tensor):
    """Same functional form as :func:`adv_losses`, on the feature
    discriminator's outputs."""
    return adv_losses(df_real, df_fake)


def perceptual_loss(
    phi: FeatureExtractor, hr: torch.Tensor, generated: torch.Tensor
) -> torch.Tensor:
    """Squared feature-map distance, normalized by the map's W x H."""
    if hr.shape != generated.shape:
        raise ValueError(f"shape mismatch: {tuple(hr.shape)} vs {tuple(generated.shape)}")
    fa = phi(hr)
    fb = phi(generated)
    _, _, h, w = fa.shape
    return torch.sum((fa - fb) ** 2) / (w * h) / fa.shape[0]


def gram(features: torch.Tensor) -> torch.Tensor:
    """G = F F^T over flattened spatial dimensions; (n, C, C)."""
    n, c, h, w = features.shape
    flat = features.reshape(n, c, h * w)
    return flat @ flat.transpose(1, 2)


def style_loss(
    phi: FeatureExtractor, hr: torch.Tensor, generated: torch.Tensor
) -> torch.Tensor:
    """Squared Gram-matrix distance, normalized by the map's W x H."""
    if hr.shape != generated.shape:
        raise ValueError(f"shape mismatch: {tuple(hr.shape)} vs {tuple(generated.shape)}")
    fa = phi(hr)
    fb = phi(generated)
    _, _, h, w = fa.shape
    return torch.sum((gram(fa) - gram(fb)) ** 2) / (w * h) / fa.shape[0]


def level_losses(level: int, weights: LossWeights | None = None) -> dict[str, float]:
    """Weighted generator-term subset for a degradation level."""
    weights = weights or LossWeights()
    if level not in LEVEL_TERMS:
        raise ValueError(f"level must be 1, 2 or 3, got {level}")
    all_weights = {
        "adv": weights.w_adv,
        "fadv": weights.w_fadv,
        "per": weights.w_per,
        "sty": weights.w_sty,
    }
    return {term: all_weights[term] for term in LEVEL_TERMS[level]}
