"""Image buffers, color conversion, lossless transforms and PNG I/O.

Samples are stored as normalized floats in [0, 1]; quantization to 8 bit
happens only when a file is written, so chained operations never accumulate
double-rounding error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ColorspaceError, ImageSizeError


class Colorspace(enum.Enum):
    RGB = "rgb"
    YCBCR = "ycbcr"
    GRAY = "gray"
    MASK = "mask"


# ITU-R BT.601 studio-swing RGB -> YCbCr (8-bit scale, R/G/B in [0,1]).
_RGB_TO_YCBCR = np.array(
    [
        [65.481, 128.553, 24.966],
        [-37.797, -74.203, 112.0],
        [112.0, -93.786, -18.214],
    ]
)
_YCBCR_OFFSET = np.array([16.0, 128.0, 128.0])
_YCBCR_TO_RGB = np.linalg.inv(_RGB_TO_YCBCR)

# Full-swing luma weights, used only to grayscale images for feature work.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ImageBuffer:
    """Planar raster: ``data`` has shape (height, width, channels), float64.

    Treated as an immutable value; operations return new buffers.
    """

    data: np.ndarray
    colorspace: Colorspace = Colorspace.RGB

    def __post_init__(self):
        # Copy so the buffer can never alias caller-held memory.
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ImageSizeError(f"expected 2-D or 3-D sample array, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ImageSizeError(f"degenerate image size {w}x{h}")
        if c not in (1, 3):
            raise ImageSizeError(f"channel count must be 1 or 3, got {c}")
        if self.colorspace in (Colorspace.GRAY, Colorspace.MASK) and c != 1:
            raise ColorspaceError(f"{self.colorspace.value} image must have 1 channel, got {c}")
        if self.colorspace in (Colorspace.RGB, Colorspace.YCBCR) and c != 3:
            raise ColorspaceError(f"{self.colorspace.value} image must have 3 channels, got {c}")
        if self.colorspace is Colorspace.MASK:
            vals = np.unique(arr)
            if not np.isin(vals, (0.0, 1.0)).all():
                raise ColorspaceError("mask samples must all be 0.0 or 1.0")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def plane(self, i: int = 0) -> np.ndarray:
        """Channel ``i`` as a 2-D array view."""
        return self.data[:, :, i]


def to_ycbcr(img: ImageBuffer) -> ImageBuffer:
    """BT.601 studio-swing RGB -> YCbCr; Y is channel 0."""
    if img.colorspace is not Colorspace.RGB:
        raise ColorspaceError(f"to_ycbcr expects RGB input, got {img.colorspace.value}")
    ycc = img.data @ _RGB_TO_YCBCR.T + _YCBCR_OFFSET
    return ImageBuffer(ycc / 255.0, Colorspace.YCBCR)


def from_ycbcr(img: ImageBuffer) -> ImageBuffer:
    """Inverse of :func:`to_ycbcr`; output clamped to [0, 1]."""
    if img.colorspace is not Colorspace.YCBCR:
        raise ColorspaceError(f"from_ycbcr expects YCbCr input, got {img.colorspace.value}")
    rgb = (img.data * 255.0 - _YCBCR_OFFSET) @ _YCBCR_TO_RGB.T
    return ImageBuffer(np.clip(rgb, 0.0, 1.0), Colorspace.RGB)


def luma_y(img: ImageBuffer) -> np.ndarray:
    """Y channel in normalized units: BT.601 studio swing for RGB inputs,
    the single plane as-is for gray/mask inputs."""
    if img.colorspace is Colorspace.RGB:
        return to_ycbcr(img).plane(0)
    if img.colorspace is Colorspace.YCBCR:
        return img.plane(0)
    return img.plane(0)


def to_gray(img: ImageBuffer) -> ImageBuffer:
    """Full-swing luma grayscale (for feature detection, not metrics)."""
    if img.colorspace in (Colorspace.GRAY, Colorspace.MASK):
        return ImageBuffer(img.plane(0), Colorspace.GRAY)
    if img.colorspace is Colorspace.YCBCR:
        img = from_ycbcr(img)
    return ImageBuffer(img.data @ _LUMA, Colorspace.GRAY)


def rotate90(img: ImageBuffer, quarter_turns: int) -> ImageBuffer:
    """Counterclockwise rotation by ``quarter_turns`` * 90 degrees (lossless)."""
    if quarter_turns % 4 == 0:
        return img
    return ImageBuffer(np.rot90(img.data, k=quarter_turns % 4, axes=(0, 1)), img.colorspace)


def flip_h(img: ImageBuffer) -> ImageBuffer:
    """Horizontal mirror (lossless)."""
    return ImageBuffer(img.data[:, ::-1, :], img.colorspace)


def read_png(path: str | Path) -> ImageBuffer:
    """Decode an 8-bit PNG; sample v maps to v/255. Non-gray modes become RGB."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64) / 255.0
            return ImageBuffer(arr, Colorspace.GRAY)
        if im.mode != "RGB":
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
        return ImageBuffer(arr, Colorspace.RGB)


def write_png(img: ImageBuffer, path: str | Path) -> None:
    """Encode to 8-bit PNG, rounding half away from zero."""
    arr = np.clip(img.data, 0.0, 1.0)
    q = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    if img.channels == 1:
        Image.fromarray(q[:, :, 0], mode="L").save(path, format="PNG")
    else:
        if img.colorspace is Colorspace.YCBCR:
            raise ColorspaceError("convert YCbCr to RGB before writing")
        Image.fromarray(q, mode="RGB").save(path, format="PNG")
