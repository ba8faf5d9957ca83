"""End-to-end alignment of imperfectly corresponding LR/HR image pairs.

Pipeline: upsample the raw LR to the HR's nominal size, detect and match
features, filter matches geometrically, estimate an affine transform with
RANSAC, warp the LR onto the HR frame, binarize the warp-validity mask,
find the largest inscribed rectangle and crop both images to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateGeometryError,
    EmptyMaskError,
    ImageSizeError,
    InsufficientMatchesError,
)
from .image import Colorspace, ImageBuffer, to_gray
from .matching import GmsConfig, Match, MlcConfig, filter_gms, filter_mlc, match_descriptors
from .resample import AffineTransform, resize_to, warp_affine
from .sift import Keypoint, SiftParams, detect_and_describe


@dataclass(frozen=True)
class RansacConfig:
    inlier_threshold: float = 3.0
    confidence: float = 0.995
    max_iterations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")


@dataclass(frozen=True)
class CropRect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ImageSizeError(f"degenerate crop {self.w}x{self.h}")

    def corners(self) -> np.ndarray:
        return np.array(
            [
                [self.x, self.y],
                [self.x + self.w, self.y],
                [self.x, self.y + self.h],
                [self.x + self.w, self.y + self.h],
            ],
            dtype=np.float64,
        )

    def contains(self, x: float, y: float) -> bool:
        return self.x <= x < self.x + self.w and self.y <= y < self.y + self.h


@dataclass(frozen=True)
class RegistrationResult:
    transform: AffineTransform
    inliers: tuple[int, ...]
    mean_residual: float
    crop_hr: CropRect
    crop_lr: CropRect


@dataclass(frozen=True)
class RegistrationConfig:
    mlc: MlcConfig = field(default_factory=MlcConfig)
    gms: GmsConfig = field(default_factory=GmsConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    sift: SiftParams = field(default_factory=SiftParams)
    match_ratio: float = 0.8
    min_inliers: int = 12
    mlc_before_gms: bool = False
    exclude: tuple[CropRect, ...] = ()


def _fit_affine(src: np.ndarray, dst: np.ndarray) -> AffineTransform:
    """Least-squares affine src -> dst for n >= 3 point pairs."""
    n = src.shape[0]
    m = np.column_stack([src, np.ones(n)])
    coef, _, rank, _ = np.linalg.lstsq(m, dst, rcond=None)
    if rank < 3:
        raise DegenerateGeometryError("point configuration does not constrain an affine map")
    return AffineTransform(
        coef[0, 0], coef[1, 0], coef[2, 0], coef[0, 1], coef[1, 1], coef[2, 1]
    )


def estimate_affine_ransac(
    matches: list[Match],
    kps_a: list[Keypoint],
    kps_b: list[Keypoint],
    cfg: RansacConfig | None = None,
) -> tuple[AffineTransform, list[int]]:
    """Robust affine estimation mapping A keypoints onto B keypoints.

    Minimal samples of 3 non-collinear correspondences; the model with the
    most inliers (reprojection error < threshold) wins and is refit by
    least squares over its inliers. Deterministic for a fixed seed.
    """
    cfg = cfg or RansacConfig()
    if len(matches) < 3:
        raise InsufficientMatchesError(f"need >= 3 matches, got {len(matches)}")
    src = np.array([[kps_a[m.idx_a].x, kps_a[m.idx_a].y] for m in matches])
    dst = np.array([[kps_b[m.idx_b].x, kps_b[m.idx_b].y] for m in matches])
    n = len(matches)
    rng = np.random.default_rng(cfg.seed)

    best_inliers: np.ndarray | None = None
    best_count = 0
    saw_valid_sample = False
    max_iter = cfg.max_iterations
    it = 0
    while it < max_iter:
        it += 1
        pick = rng.choice(n, size=3, replace=False)
        p = src[pick]
        cross = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (
            p[2, 0] - p[0, 0]
        )
        if abs(cross) < 1e-8:
            continue
        saw_valid_sample = True
        m3 = np.column_stack([p, np.ones(3)])
        try:
            coef = np.linalg.solve(m3, dst[pick])
        except np.linalg.LinAlgError:
            continue
        mapped = np.column_stack([src, np.ones(n)]) @ coef
        err = np.linalg.norm(mapped - dst, axis=1)
        inl = err < cfg.inlier_threshold
        count = int(inl.sum())
        if count > best_count:
            best_count = count
            best_inliers = inl
            # Adaptive iteration bound from the observed inlier ratio.
            w = count / n
            if w >= 1.0:
                break
            denom = np.log1p(-min(w**3, 1 - 1e-12))
            if denom < 0:
                needed = int(np.ceil(np.log(1.0 - cfg.confidence) / denom))
                max_iter = min(cfg.max_iterations, max(needed, 1))

    if not saw_valid_sample:
        raise DegenerateGeometryError("all sampled correspondences were collinear")
    if best_inliers is None or best_count < 3:
        raise InsufficientMatchesError("no model reached 3 inliers")
    idx = np.flatnonzero(best_inliers)
    transform = _fit_affine(src[idx], dst[idx])
    return transform, [int(i) for i in idx]


def binarize_validity(mask: ImageBuffer, threshold: float = 0.999) -> ImageBuffer:
    """Threshold a warp-validity image to an exact 0/1 mask."""
    if mask.channels != 1:
        raise ImageSizeError("validity mask must be single channel")
    return ImageBuffer((mask.plane(0) >= threshold).astype(np.float64), Colorspace.MASK)


def largest_inscribed_rect(mask: ImageBuffer) -> CropRect:
    """Maximum-area axis-aligned all-ones rectangle of a binary mask.

    Per-row histogram with a monotonic stack, O(W*H). Ties on area are
    broken toward the smallest x, then the smallest y.
    """
    if mask.colorspace is not Colorspace.MASK:
        mask = binarize_validity(mask)
    grid = mask.plane(0) > 0.5
    if not grid.any():
        raise EmptyMaskError("mask contains no valid pixels")
    h, w = grid.shape
    heights = np.zeros(w, dtype=np.int64)
    best = None  # (area, x, y, w, h)

    def consider(area, x, y, rw, rh):
        nonlocal best
        if best is None or (-area, x, y) < (-best[0], best[1], best[2]):
            best = (area, x, y, rw, rh)

    for row in range(h):
        heights = np.where(grid[row], heights + 1, 0)
        stack: list[int] = []
        j = 0
        while j <= w:
            cur = heights[j] if j < w else 0
            if not stack or heights[stack[-1]] <= cur:
                stack.append(j)
                j += 1
            else:
                top = stack.pop()
                bar = int(heights[top])
                left = stack[-1] + 1 if stack else 0
                width = j - left
                if bar > 0:
                    consider(bar * width, left, row - bar + 1, width, bar)
    area, x, y, rw, rh = best
    return CropRect(int(x), int(y), int(rw), int(rh))


def map_crop_to_lr(
    crop_hr: CropRect,
    t: AffineTransform,
    scale_ratio: float | tuple[float, float],
    lr_size: tuple[int, int] | None = None,
) -> CropRect:
    """HR crop rectangle -> the corresponding rectangle on the raw LR image.

    Maps the corners through t^-1, takes the bounding box, scales by the
    LR/HR nominal size ratio and clamps to the LR bounds when given.
    """
    rx, ry = scale_ratio if isinstance(scale_ratio, tuple) else (scale_ratio, scale_ratio)
    corners = t.inverse().apply(crop_hr.corners())
    x0 = np.min(corners[:, 0]) * rx
    y0 = np.min(corners[:, 1]) * ry
    x1 = np.max(corners[:, 0]) * rx
    y1 = np.max(corners[:, 1]) * ry

    def _round(v: float) -> int:
        return int(np.floor(v + 0.5))

    xi, yi = _round(x0), _round(y0)
    wi, hi = _round(x1) - xi, _round(y1) - yi
    if lr_size is not None:
        lw, lh = lr_size
        xi2, yi2 = max(xi, 0), max(yi, 0)
        wi = min(xi + wi, lw) - xi2
        hi = min(yi + hi, lh) - yi2
        xi, yi = xi2, yi2
    if wi < 1 or hi < 1:
        raise ImageSizeError(f"mapped crop degenerate: {wi}x{hi}")
    return CropRect(xi, yi, wi, hi)


def crop(img: ImageBuffer, rect: CropRect) -> ImageBuffer:
    if rect.x < 0 or rect.y < 0 or rect.x + rect.w > img.width or rect.y + rect.h > img.height:
        raise ImageSizeError(f"crop {rect} exceeds image {img.width}x{img.height}")
    return ImageBuffer(
        img.data[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w, :], img.colorspace
    )


def register_pair(
    raw_lr: ImageBuffer,
    raw_hr: ImageBuffer,
    cfg: RegistrationConfig | None = None,
    diagnostics: dict | None = None,
) -> tuple[ImageBuffer, ImageBuffer, RegistrationResult]:
    """Align a raw LR/HR pair; returns (lr_aligned, hr_aligned, result).

    Both returned images share the HR-scale crop dimensions; the result
    also carries the LR-resolution crop rectangle for scale-factor pairs.
    Manual pre-cropping of moving content is the operator's job; regions
    in ``cfg.exclude`` (HR-frame coordinates) are ignored during matching.
    Passing a ``diagnostics`` dict captures the keypoints, the candidate
    matches and the per-filter verdicts for debug dumps.
    """
    cfg = cfg or RegistrationConfig()
    lr_up = resize_to(raw_lr, raw_hr.width, raw_hr.height, antialias=False)

    kps_a, desc_a = detect_and_describe(to_gray(lr_up), cfg.sift)
    kps_b, desc_b = detect_and_describe(to_gray(raw_hr), cfg.sift)
    if not kps_a or not kps_b:
        raise AlignmentError("features", f"keypoints: lr={len(kps_a)}, hr={len(kps_b)}")

    candidates = match_descriptors(desc_a, desc_b, cfg.match_ratio)
    if cfg.exclude:
        candidates = [
            m
            for m in candidates
            if not any(
                r.contains(kps_a[m.idx_a].x, kps_a[m.idx_a].y)
                or r.contains(kps_b[m.idx_b].x, kps_b[m.idx_b].y)
                for r in cfg.exclude
            )
        ]
    size = (raw_hr.width, raw_hr.height)
    if cfg.mlc_before_gms:
        matches = filter_mlc(candidates, kps_a, kps_b, size[0], size[1], cfg.mlc)
        matches = filter_gms(matches, kps_a, kps_b, size, size, cfg.gms)
    else:
        matches = filter_gms(candidates, kps_a, kps_b, size, size, cfg.gms)
        matches = filter_mlc(matches, kps_a, kps_b, size[0], size[1], cfg.mlc)
    if diagnostics is not None:
        # Independent per-filter verdicts over the candidate list; each
        # candidate's idx_a is unique, so it keys the row.
        gms_only = filter_gms(candidates, kps_a, kps_b, size, size, cfg.gms)
        mlc_only = filter_mlc(candidates, kps_a, kps_b, size[0], size[1], cfg.mlc)
        row_of = {m.idx_a: i for i, m in enumerate(candidates)}
        diagnostics.update(
            kps_a=kps_a,
            kps_b=kps_b,
            matches=candidates,
            kept_gms={row_of[m.idx_a] for m in gms_only},
            kept_mlc={row_of[m.idx_a] for m in mlc_only},
        )
    if len(matches) < 3:
        raise AlignmentError("matching", f"{len(matches)} matches after filtering")

    try:
        transform, inliers = estimate_affine_ransac(matches, kps_a, kps_b, cfg.ransac)
    except (InsufficientMatchesError, DegenerateGeometryError) as exc:
        raise AlignmentError("ransac", str(exc)) from exc
    if len(inliers) < cfg.min_inliers:
        raise AlignmentError(
            "ransac", f"{len(inliers)} inliers < required {cfg.min_inliers}"
        )
    src = np.array([[kps_a[matches[i].idx_a].x, kps_a[matches[i].idx_a].y] for i in inliers])
    dst = np.array([[kps_b[matches[i].idx_b].x, kps_b[matches[i].idx_b].y] for i in inliers])
    residuals = np.linalg.norm(transform.apply(src) - dst, axis=1)

    warped, validity = warp_affine(lr_up, transform, raw_hr.width, raw_hr.height)
    mask = binarize_validity(validity)
    try:
        crop_hr = largest_inscribed_rect(mask)
    except EmptyMaskError as exc:
        raise AlignmentError("ransac", f"warp produced no valid region: {exc}") from exc

    ratio = (raw_lr.width / raw_hr.width, raw_lr.height / raw_hr.height)
    crop_lr = map_crop_to_lr(crop_hr, transform, ratio, (raw_lr.width, raw_lr.height))
    result = RegistrationResult(
        transform=transform,
        inliers=tuple(inliers),
        mean_residual=float(residuals.mean()),
        crop_hr=crop_hr,
        crop_lr=crop_lr,
    )
    return crop(warped, crop_hr), crop(raw_hr, crop_hr), result
