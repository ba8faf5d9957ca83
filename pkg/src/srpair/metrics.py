"""Evaluation protocol: PSNR and SSIM on the Y channel, plus batch reports.

Both metrics run on the luma plane in 8-bit scale (floats, never quantized).
RGB inputs go through the BT.601 studio-swing conversion; grayscale inputs
are used as Y directly.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ImageSizeError
from .image import ImageBuffer, luma_y, read_png
from .manifest import PairManifest

PSNR_CAP_DB = 100.0

_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_L = 255.0
_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11x11 window


def _y8(img: ImageBuffer) -> np.ndarray:
    return luma_y(img) * 255.0


def _cropped_y8(ref: ImageBuffer, test: ImageBuffer, crop_border: int):
    if (ref.width, ref.height) != (test.width, test.height):
        raise ImageSizeError(
            f"image sizes differ: {ref.width}x{ref.height} vs {test.width}x{test.height}"
        )
    if crop_border < 0 or 2 * crop_border >= min(ref.width, ref.height):
        raise ImageSizeError(f"crop_border {crop_border} too large for image")
    a = _y8(ref)
    b = _y8(test)
    if crop_border:
        a = a[crop_border:-crop_border, crop_border:-crop_border]
        b = b[crop_border:-crop_border, crop_border:-crop_border]
    return a, b


def psnr_y(ref: ImageBuffer, test: ImageBuffer, crop_border: int = 0) -> float:
    """Peak signal-to-noise ratio in dB on Y; identical images cap at 100."""
    a, b = _cropped_y8(ref, test, crop_border)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0**2 / mse), PSNR_CAP_DB)


def _ssim_window() -> np.ndarray:
    x = np.arange(-_SSIM_RADIUS, _SSIM_RADIUS + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * _SSIM_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim_y(ref: ImageBuffer, test: ImageBuffer, crop_border: int = 0) -> float:
    """Single-scale structural similarity on Y.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=255; the mean is
    taken over window positions fully inside the image.
    """
    a, b = _cropped_y8(ref, test, crop_border)
    if min(a.shape) < 2 * _SSIM_RADIUS + 1:
        raise ImageSizeError(f"cropped image {a.shape} smaller than the SSIM window")
    win = _ssim_window()

    def filt(x):
        return ndimage.correlate(x, win, mode="constant")

    ux = filt(a)
    uy = filt(b)
    uxx = filt(a * a)
    uyy = filt(b * b)
    uxy = filt(a * b)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    c1 = (_SSIM_K1 * _SSIM_L) ** 2
    c2 = (_SSIM_K2 * _SSIM_L) ** 2
    smap = ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / (
        (ux * ux + uy * uy + c1) * (vx + vy + c2)
    )
    r = _SSIM_RADIUS
    return float(np.mean(smap[r:-r, r:-r]))


@dataclass(frozen=True)
class MetricRow:
    id: str
    cls: str
    scale: int
    psnr_db: float | None
    ssim: float | None
    status: str  # ok | missing | error


@dataclass
class MetricReport:
    rows: list[MetricRow] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return all(r.status == "ok" for r in self.rows)

    def aggregates(self) -> list[dict]:
        groups: dict[tuple[str, int], list[MetricRow]] = {}
        for r in self.rows:
            if r.status == "ok":
                groups.setdefault((r.cls, r.scale), []).append(r)
        out = []
        for (cls, scale) in sorted(groups):
            rows = groups[(cls, scale)]
            out.append(
                {
                    "class": cls,
                    "scale": scale,
                    "count": len(rows),
                    "mean_psnr_db": float(np.mean([r.psnr_db for r in rows])),
                    "mean_ssim": float(np.mean([r.ssim for r in rows])),
                }
            )
        return out

    def write_csv(self, path: str | Path) -> None:
        lines = ["id,class,scale,psnr_db,ssim,status"]
        for r in self.rows:
            psnr = f"{r.psnr_db:.4f}" if r.psnr_db is not None else ""
            ssim = f"{r.ssim:.6f}" if r.ssim is not None else ""
            lines.append(f"{r.id},{r.cls},{r.scale},{psnr},{ssim},{r.status}")
        Path(path).write_text("\n".join(lines) + "\n")

    def write_aggregates_json(self, path: str | Path) -> None:
        doc = {"complete": self.complete, "aggregates": self.aggregates()}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _score_entry(entry, sr_dir: Path, base_dir: Path, crop_border: int | None) -> MetricRow:
    entry_id = Path(entry.hr).stem
    sr_path = sr_dir / Path(entry.hr).name
    border = entry.scale if crop_border is None else crop_border
    if not sr_path.is_file():
        return MetricRow(entry_id, entry.cls, entry.scale, None, None, "missing")
    try:
        hr = read_png(base_dir / entry.hr)
        sr = read_png(sr_path)
        psnr = psnr_y(hr, sr, border)
        ssim = ssim_y(hr, sr, border)
    except Exception:
        return MetricRow(entry_id, entry.cls, entry.scale, None, None, "error")
    return MetricRow(entry_id, entry.cls, entry.scale, psnr, ssim, "ok")


def evaluate_manifest(
    manifest: PairManifest,
    sr_dir: str | Path,
    base_dir: str | Path,
    crop_border: int | None = None,
    jobs: int = 1,
) -> MetricReport:
    """Score one SR output per manifest entry against its HR ground truth.

    SR files are name-matched on the HR basename inside ``sr_dir``. Entries
    without an SR file are marked missing and excluded from aggregates.
    ``crop_border`` defaults to each entry's scale factor. Rows come back
    in manifest order no matter how many workers run.
    """
    sr_dir = Path(sr_dir)
    base_dir = Path(base_dir)
    report = MetricReport()
    if jobs > 1 and len(manifest.entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = pool.map(
                lambda e: _score_entry(e, sr_dir, base_dir, crop_border), manifest.entries
            )
            report.rows.extend(rows)
    else:
        for entry in manifest.entries:
            report.rows.append(_score_entry(entry, sr_dir, base_dir, crop_border))
    return report
