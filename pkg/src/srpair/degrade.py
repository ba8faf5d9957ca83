"""Degradation synthesis: classical blur/downsample/noise pairs, pair
augmentation, and the dual-quality video pairing pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ImageSizeError, ManifestError
from .filters import (
    NoiseSpec,
    add_gaussian_noise,
    center_crop_to_multiple,
    convolve,
    delta_kernel,
    gaussian_kernel,
)
from .image import ImageBuffer, flip_h, read_png, rotate90, write_png
from .manifest import PairEntry, PairManifest
from .register import RegistrationConfig, crop, register_pair
from .resample import resize_bicubic

log = logging.getLogger(__name__)

_SCALES = (2, 3, 4)


@dataclass(frozen=True)
class DegradationSpec:
    """Parameters of the classical degradation: blur, downsample, noise."""

    scale: int = 4
    kernel: str = "delta"  # "delta" or "gaussian"
    kernel_sigma: float = 1.6
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.scale not in _SCALES:
            raise ValueError(f"scale must be one of {_SCALES}, got {self.scale}")
        if self.kernel not in ("delta", "gaussian"):
            raise ValueError(f"kernel must be 'delta' or 'gaussian', got {self.kernel!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def make_kernel(self):
        if self.kernel == "delta":
            return delta_kernel()
        return gaussian_kernel(self.kernel_sigma)


@dataclass(frozen=True)
class StillSceneParams:
    """Still-window detection on frame sequences."""

    diff_threshold: float = 0.004
    window: int = 5

    def __post_init__(self):
        if self.diff_threshold <= 0:
            raise ValueError("diff_threshold must be positive")
        if self.window < 2:
            raise ValueError("window must be >= 2")


@dataclass(frozen=True)
class AugmentPolicy:
    rotations: tuple[int, ...] = ()
    hflip: bool = False

    def __post_init__(self):
        for r in self.rotations:
            if r not in (90, 180, 270):
                raise ValueError(f"rotations must be from {{90,180,270}}, got {r}")


def degrade_classic(hr: ImageBuffer, spec: DegradationSpec) -> ImageBuffer:
    """Blur, bicubic-downsample by 1/scale, add seeded noise, clamp.

    The image is center-cropped to a multiple of the scale first. With the
    delta kernel and zero noise this reduces exactly to plain antialiased
    bicubic downsampling.
    """
    if min(hr.width, hr.height) < 2 * spec.scale:
        raise ImageSizeError(
            f"image {hr.width}x{hr.height} smaller than 2x scale {spec.scale}"
        )
    hr = center_crop_to_multiple(hr, spec.scale)
    blurred = convolve(hr, spec.make_kernel())
    lr = resize_bicubic(blurred, 1.0 / spec.scale, antialias=True)
    return add_gaussian_noise(lr, NoiseSpec(spec.noise_sigma, spec.seed))


def _list_pngs(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")


def build_interpolation_pairs(
    hr_dir: str | Path, spec: DegradationSpec, out_dir: str | Path
) -> PairManifest:
    """One degraded LR per HR image; writes hr/, lr/ and returns the manifest.

    The HR copy written out is the center-cropped one, so LR dims * scale
    always equal HR dims exactly. Unreadable inputs are skipped with a
    warning and recorded in the manifest.
    """
    hr_dir = Path(hr_dir)
    out_dir = Path(out_dir)
    files = _list_pngs(hr_dir)
    if not files:
        raise ManifestError(f"no PNG images in {hr_dir}")
    (out_dir / "hr").mkdir(parents=True, exist_ok=True)
    (out_dir / "lr").mkdir(parents=True, exist_ok=True)

    manifest = PairManifest()
    for path in files:
        try:
            hr = read_png(path)
            lr = degrade_classic(hr, spec)
        except Exception as exc:  # unreadable or too small: skip, keep going
            log.warning("skipping %s: %s", path.name, exc)
            manifest.skipped.append(f"{path.name}: {exc}")
            continue
        hr_cropped = center_crop_to_multiple(hr, spec.scale)
        hr_rel = f"hr/{path.stem}.png"
        lr_rel = f"lr/{path.stem}_x{spec.scale}.png"
        write_png(hr_cropped, out_dir / hr_rel)
        write_png(lr, out_dir / lr_rel)
        manifest.entries.append(
            PairEntry(
                hr=hr_rel,
                lr=lr_rel,
                cls="interpolation",
                scale=spec.scale,
                provenance=(
                    f"classic kernel={spec.kernel} sigma={spec.kernel_sigma} "
                    f"noise={spec.noise_sigma} seed={spec.seed} src={path.name}"
                ),
            )
        )
    return manifest


_VARIANT_SUFFIX = {
    (0, False): "",
    (90, False): "_r90",
    (180, False): "_r180",
    (270, False): "_r270",
    (0, True): "_hf",
    (90, True): "_r90hf",
    (180, True): "_r180hf",
    (270, True): "_r270hf",
}


def _apply_variant(img: ImageBuffer, rotation: int, flipped: bool) -> ImageBuffer:
    out = rotate90(img, rotation // 90)
    return flip_h(out) if flipped else out


def augment_pairs(
    manifest: PairManifest,
    policy: AugmentPolicy,
    base_dir: str | Path,
    out_dir: str | Path,
    seed: int = 0,
) -> PairManifest:
    """Materialize rotated/flipped copies of every pair.

    The same transform is applied to both members so alignment is preserved;
    augmented entries are appended after the originals. ``seed`` is accepted
    for interface symmetry with the other stages but the expansion itself is
    exhaustive and deterministic.
    """
    del seed
    base_dir = Path(base_dir)
    out_dir = Path(out_dir)
    variants = [
        (r, f)
        for r in (0,) + tuple(sorted(policy.rotations))
        for f in ((False, True) if policy.hflip else (False,))
    ]
    out = PairManifest(entries=list(manifest.entries), skipped=list(manifest.skipped))
    aug_dir = out_dir / "aug"
    if len(variants) > 1:
        aug_dir.mkdir(parents=True, exist_ok=True)
    for entry in manifest.entries:
        hr = lr = None
        for rotation, flipped in variants:
            if rotation == 0 and not flipped:
                continue  # the original entry is kept as-is
            if hr is None:
                hr = read_png(base_dir / entry.hr)
                lr = read_png(base_dir / entry.lr)
            suffix = _VARIANT_SUFFIX[(rotation, flipped)]
            hr_rel = f"aug/{Path(entry.hr).stem}{suffix}.png"
            lr_rel = f"aug/{Path(entry.lr).stem}{suffix}.png"
            write_png(_apply_variant(hr, rotation, flipped), out_dir / hr_rel)
            write_png(_apply_variant(lr, rotation, flipped), out_dir / lr_rel)
            parts = ([f"rot{rotation}"] if rotation else []) + (["hflip"] if flipped else [])
            note = "+".join(parts)
            out.entries.append(
                PairEntry(
                    hr=hr_rel,
                    lr=lr_rel,
                    cls=entry.cls,
                    scale=entry.scale,
                    level=entry.level,
                    provenance=f"{note} of {entry.hr}",
                )
            )
    return out


def extract_still_pairs(
    hr_frames_dir: str | Path,
    lr_frames_dir: str | Path,
    params: StillSceneParams | None = None,
) -> list[int]:
    """Indices of representative frames inside still windows.

    A still window is a maximal run of >= ``window`` frames whose
    consecutive mean-absolute differences (on the HR sequence) stay below
    the threshold; the middle frame index of each window is returned.
    """
    params = params or StillSceneParams()
    hr_files = _list_pngs(Path(hr_frames_dir))
    lr_files = _list_pngs(Path(lr_frames_dir))
    if len(hr_files) != len(lr_files):
        raise ManifestError(
            f"frame count mismatch: {len(hr_files)} HR vs {len(lr_files)} LR"
        )
    if len(hr_files) < 2:
        return []
    prev = read_png(hr_files[0])
    diffs = []
    for path in hr_files[1:]:
        cur = read_png(path)
        if cur.data.shape != prev.data.shape:
            raise ImageSizeError(f"frame size changed at {path.name}")
        diffs.append(float(np.mean(np.abs(cur.data - prev.data))))
        prev = cur

    still = [d < params.diff_threshold for d in diffs]
    selected = []
    run_start = None
    for i, flag in enumerate(still + [False]):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            first, last = run_start, i  # frames run_start .. i (inclusive)
            if last - first + 1 >= params.window:
                selected.append((first + last) // 2)
            run_start = None
    return selected


def build_video_pairs(
    hr_frames_dir: str | Path,
    lr_frames_dir: str | Path,
    selected: list[int],
    cfg: RegistrationConfig | None = None,
    out_dir: str | Path = "video_pairs",
) -> PairManifest:
    """Register each selected dual-quality frame pair and emit video entries.

    The HR side is the aligned HR crop; the LR side is the corresponding
    crop of the raw LR frame (true degraded pixels, at LR resolution).
    Failures are logged with the failing stage and recorded as skipped.
    """
    cfg = cfg or RegistrationConfig()
    hr_files = _list_pngs(Path(hr_frames_dir))
    lr_files = _list_pngs(Path(lr_frames_dir))
    out_dir = Path(out_dir)
    (out_dir / "hr").mkdir(parents=True, exist_ok=True)
    (out_dir / "lr").mkdir(parents=True, exist_ok=True)
    manifest = PairManifest()
    for idx in selected:
        hr_frame = read_png(hr_files[idx])
        lr_frame = read_png(lr_files[idx])
        try:
            _, hr_aligned, result = register_pair(lr_frame, hr_frame, cfg)
        except AlignmentError as exc:
            log.warning("frame %d failed: %s", idx, exc)
            manifest.skipped.append(f"frame {idx}: stage={exc.stage}")
            continue
        lr_crop = crop(lr_frame, result.crop_lr)
        stem = hr_files[idx].stem
        hr_rel = f"hr/{stem}.png"
        lr_rel = f"lr/{stem}.png"
        write_png(hr_aligned, out_dir / hr_rel)
        write_png(lr_crop, out_dir / lr_rel)
        scale = max(round(hr_frame.width / lr_frame.width), 1)
        manifest.entries.append(
            PairEntry(
                hr=hr_rel,
                lr=lr_rel,
                cls="video",
                scale=scale,
                provenance=(
                    f"frame={stem} inliers={len(result.inliers)} "
                    f"residual={result.mean_residual:.3f}"
                ),
            )
        )
    if not manifest.entries:
        log.warning("no video pairs survived registration")
    return manifest
