"""Blur kernels, convolution and seeded Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageSizeError
from .image import ImageBuffer

_NORM_TOL = 1e-6


@dataclass(frozen=True)
class Kernel2D:
    """Square normalized kernel with side 2*radius + 1."""

    radius: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        side = 2 * self.radius + 1
        w = w.reshape(side, side)
        if abs(float(w.sum()) - 1.0) > _NORM_TOL:
            raise ValueError(f"kernel weights sum to {w.sum():.8f}, expected 1.0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def delta_kernel() -> Kernel2D:
    """Identity (Dirac) kernel."""
    return Kernel2D(0, np.array([[1.0]]))


def gaussian_kernel(sigma: float) -> Kernel2D:
    """Pixel-integrated 2-D Gaussian, radius ceil(3*sigma), normalized.

    Each weight is the Gaussian mass over the unit pixel cell (via erf),
    not a point sample, so the kernel stays accurate at small sigma.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    edges = (np.arange(-radius, radius + 2) - 0.5) / (sigma * math.sqrt(2.0))
    cdf = 0.5 * (1.0 + np.array([math.erf(e) for e in edges]))
    w1 = np.diff(cdf)
    w2 = np.outer(w1, w1)
    return Kernel2D(radius, w2 / w2.sum())


def convolve(img: ImageBuffer, k: Kernel2D, border: str = "reflect") -> ImageBuffer:
    """2-D convolution per channel; reflect (symmetric) border handling.

    Output is not clamped: with a normalized non-negative kernel the result
    stays inside the input range, and leaving it unclamped keeps the
    operation linear.
    """
    if border != "reflect":
        raise ValueError(f"unsupported border mode {border!r}")
    out = np.empty_like(img.data)
    for c in range(img.channels):
        out[:, :, c] = ndimage.convolve(img.data[:, :, c], k.weights, mode="reflect")
    return ImageBuffer(out, img.colorspace)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise parameters; seed makes the draw reproducible."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


def add_gaussian_noise(img: ImageBuffer, spec: NoiseSpec) -> ImageBuffer:
    """Add seeded i.i.d. Gaussian noise and clamp to [0, 1]."""
    if spec.sigma == 0.0:
        return img
    rng = np.random.default_rng(spec.seed)
    noisy = img.data + rng.normal(0.0, spec.sigma, size=img.data.shape)
    return ImageBuffer(np.clip(noisy, 0.0, 1.0), img.colorspace)


def center_crop_to_multiple(img: ImageBuffer, multiple: int) -> ImageBuffer:
    """Center-crop so both dimensions are divisible by ``multiple``."""
    w, h = img.width, img.height
    new_w = (w // multiple) * multiple
    new_h = (h // multiple) * multiple
    if new_w < 1 or new_h < 1:
        raise ImageSizeError(f"image {w}x{h} too small to crop to a multiple of {multiple}")
    x0 = (w - new_w) // 2
    y0 = (h - new_h) // 2
    if new_w == w and new_h == h:
        return img
    return ImageBuffer(img.data[y0 : y0 + new_h, x0 : x0 + new_w, :], img.colorspace)
