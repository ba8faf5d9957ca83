import numpy as np
import pytest
from scipy import ndimage

from srpair.image import Colorspace, ImageBuffer
from srpair.resample import AffineTransform


def make_textured_gray(seed: int, size: int = 256, cell: int = 8) -> ImageBuffer:
    """Smooth random texture with structure at roughly ``cell`` pixels."""
    rng = np.random.default_rng(seed)
    base = rng.random((size // cell + 2, size // cell + 2))
    up = ndimage.zoom(base, cell, order=3)
    return ImageBuffer(np.clip(up, 0.0, 1.0)[:size, :size], Colorspace.GRAY)


def make_textured_rgb(seed: int, size: int = 256, cell: int = 8) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    chans = []
    for _ in range(3):
        base = rng.random((size // cell + 2, size // cell + 2))
        up = ndimage.zoom(base, cell, order=3)
        chans.append(np.clip(up, 0.0, 1.0)[:size, :size])
    return ImageBuffer(np.stack(chans, axis=-1), Colorspace.RGB)


def make_small_affine(rng: np.random.Generator) -> AffineTransform:
    """Rotation <= 5 deg, scale in [0.95, 1.05], translation <= 10 px."""
    angle = np.deg2rad(rng.uniform(-5.0, 5.0))
    scale = rng.uniform(0.95, 1.05)
    tx, ty = rng.uniform(-10.0, 10.0, size=2)
    ca = scale * np.cos(angle)
    sa = scale * np.sin(angle)
    return AffineTransform(ca, -sa, float(tx), sa, ca, float(ty))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
