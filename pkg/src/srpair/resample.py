"""Bicubic resampling and affine warping.

The resizer is the cubic-convolution kernel with a = -0.5 (the usual
"bicubic" of the SR literature). When downsampling with antialiasing the
kernel support is widened by the inverse scale, PIL-style. Borders are
handled by edge replication and per-pixel weight normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageSizeError, SingularTransformError
from .image import Colorspace, ImageBuffer

_CUBIC_A = -0.5


@dataclass(frozen=True)
class AffineTransform:
    """2x3 map: (x, y) -> (a*x + b*y + tx, c*x + d*y + ty)."""

    a: float
    b: float
    tx: float
    c: float
    d: float
    ty: float

    def __post_init__(self):
        if self.det() == 0.0:
            raise SingularTransformError("affine matrix has zero determinant")

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def translation(cls, tx: float, ty: float) -> "AffineTransform":
        return cls(1.0, 0.0, tx, 0.0, 1.0, ty)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "AffineTransform":
        m = np.asarray(m, dtype=np.float64).reshape(2, 3)
        return cls(m[0, 0], m[0, 1], m[0, 2], m[1, 0], m[1, 1], m[1, 2])

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b, self.tx], [self.c, self.d, self.ty]])

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Map an (n, 2) array of (x, y) points."""
        pts = np.asarray(pts, dtype=np.float64)
        x = self.a * pts[..., 0] + self.b * pts[..., 1] + self.tx
        y = self.c * pts[..., 0] + self.d * pts[..., 1] + self.ty
        return np.stack([x, y], axis=-1)

    def inverse(self) -> "AffineTransform":
        det = self.det()
        if abs(det) < 1e-12:
            raise SingularTransformError(f"determinant {det} too close to zero")
        ia, ib = self.d / det, -self.b / det
        ic, id_ = -self.c / det, self.a / det
        return AffineTransform(
            ia, ib, -(ia * self.tx + ib * self.ty), ic, id_, -(ic * self.tx + id_ * self.ty)
        )


def _cubic(x: np.ndarray) -> np.ndarray:
    """Keys cubic-convolution kernel, a = -0.5."""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (_CUBIC_A + 2.0) * ax3 - (_CUBIC_A + 3.0) * ax2 + 1.0
    far = _CUBIC_A * ax3 - 5.0 * _CUBIC_A * ax2 + 8.0 * _CUBIC_A * ax - 4.0 * _CUBIC_A
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def _axis_taps(in_len: int, out_len: int, antialias: bool):
    """Per-output tap indices (clamped) and normalized weights for one axis."""
    ratio = in_len / out_len  # source pixels per output pixel
    filterscale = ratio if (antialias and ratio > 1.0) else 1.0
    support = 2.0 * filterscale
    centers = (np.arange(out_len) + 0.5) * ratio - 0.5
    left = np.ceil(centers - support).astype(np.int64)
    n_taps = int(np.floor(2.0 * support)) + 2
    offsets = np.arange(n_taps)
    idx = left[:, None] + offsets[None, :]
    w = _cubic((idx - centers[:, None]) / filterscale)
    w /= w.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, in_len - 1)
    return idx, w


def _resize_axis(arr: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    # arr: (n_in, ...) resampled along axis 0 -> (n_out, ...).
    # One pass per tap keeps peak memory at ~2 output frames.
    out = np.zeros((idx.shape[0],) + arr.shape[1:], dtype=np.float64)
    for t in range(idx.shape[1]):
        wt = w[:, t].reshape((-1,) + (1,) * (arr.ndim - 1))
        out += wt * arr[idx[:, t]]
    return out


def resize_to(img: ImageBuffer, out_w: int, out_h: int, antialias: bool = True) -> ImageBuffer:
    """Bicubic resample to exact output dimensions; samples clamped to [0,1]."""
    if out_w < 1 or out_h < 1:
        raise ImageSizeError(f"degenerate output size {out_w}x{out_h}")
    data = img.data
    if out_h != img.height:
        idx, w = _axis_taps(img.height, out_h, antialias)
        data = _resize_axis(data, idx, w)
    if out_w != img.width:
        idx, w = _axis_taps(img.width, out_w, antialias)
        data = _resize_axis(np.swapaxes(data, 0, 1), idx, w)
        data = np.swapaxes(data, 0, 1)
    return ImageBuffer(np.clip(data, 0.0, 1.0), img.colorspace)


def resize_bicubic(img: ImageBuffer, scale: float, antialias: bool = True) -> ImageBuffer:
    """Bicubic resample by ``scale``; output dims = round(input dims * scale)."""
    if scale <= 0:
        raise ImageSizeError(f"scale must be positive, got {scale}")
    out_w = int(np.floor(img.width * scale + 0.5))
    out_h = int(np.floor(img.height * scale + 0.5))
    return resize_to(img, out_w, out_h, antialias)


def warp_affine(
    img: ImageBuffer, t: AffineTransform, out_w: int, out_h: int, interp: str = "bilinear"
) -> tuple[ImageBuffer, ImageBuffer]:
    """Warp ``img`` through ``t`` into an out_w x out_h frame.

    ``t`` maps source coordinates to destination coordinates; each output
    pixel is bilinearly sampled at t^-1(x, y). Returns the warped image and
    a validity mask that is 1.0 exactly where every contributing source tap
    (taps with zero weight do not count) lies inside the source image.
    """
    if interp != "bilinear":
        raise ValueError(f"unsupported interpolation {interp!r}")
    if out_w < 1 or out_h < 1:
        raise ImageSizeError(f"degenerate output size {out_w}x{out_h}")
    inv = t.inverse()
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    sx = inv.a * xs + inv.b * ys + inv.tx
    sy = inv.c * xs + inv.d * ys + inv.ty

    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    # Collapse the second tap when the coordinate is integral so that points
    # exactly on the last row/column stay valid.
    x1 = x0 + (fx > 0)
    y1 = y0 + (fy > 0)
    w, h = img.width, img.height
    valid = (x0 >= 0) & (x1 <= w - 1) & (y0 >= 0) & (y1 <= h - 1)

    x0c = np.clip(x0, 0, w - 1).astype(np.int64)
    x1c = np.clip(x1, 0, w - 1).astype(np.int64)
    y0c = np.clip(y0, 0, h - 1).astype(np.int64)
    y1c = np.clip(y1, 0, h - 1).astype(np.int64)

    data = img.data
    out = (
        data[y0c, x0c] * ((1 - fx) * (1 - fy))[:, :, None]
        + data[y0c, x1c] * (fx * (1 - fy))[:, :, None]
        + data[y1c, x0c] * ((1 - fx) * fy)[:, :, None]
        + data[y1c, x1c] * (fx * fy)[:, :, None]
    )
    out[~valid] = 0.0
    mask = ImageBuffer(valid.astype(np.float64), Colorspace.MASK)
    return ImageBuffer(out, img.colorspace), mask
