import numpy as np
import pytest

from srpair.errors import (
    AlignmentError,
    DegenerateGeometryError,
    EmptyMaskError,
    ImageSizeError,
    InsufficientMatchesError,
)
from srpair.image import Colorspace, ImageBuffer, luma_y
from srpair.matching import Match
from srpair.register import (
    CropRect,
    RansacConfig,
    RegistrationConfig,
    binarize_validity,
    estimate_affine_ransac,
    largest_inscribed_rect,
    map_crop_to_lr,
    register_pair,
)
from srpair.resample import AffineTransform, warp_affine
from srpair.sift import Keypoint

from .conftest import make_textured_rgb
from .oracles import max_rectangle_oracle


def kp(x, y):
    return Keypoint(x=float(x), y=float(y), scale=1.0, orientation=0.0, response=1.0)


def pairs_to_inputs(pa, pb):
    kps_a = [kp(x, y) for x, y in pa]
    kps_b = [kp(x, y) for x, y in pb]
    matches = [Match(i, i, 0.0) for i in range(len(pa))]
    return matches, kps_a, kps_b


# --- RANSAC ----------------------------------------------------------------


def test_ransac_identity_on_exact_correspondences(rng):
    pts = rng.uniform(10, 200, (10, 2))
    matches, kps_a, kps_b = pairs_to_inputs(pts, pts)
    t, inliers = estimate_affine_ransac(matches, kps_a, kps_b)
    assert len(inliers) == 10
    assert np.abs(t.matrix() - AffineTransform.identity().matrix()).max() <= 1e-9


def test_ransac_exact_translation(rng):
    pts = rng.uniform(0, 300, (20, 2))
    matches, kps_a, kps_b = pairs_to_inputs(pts, pts + np.array([5.0, 7.0]))
    t, inliers = estimate_affine_ransac(matches, kps_a, kps_b)
    assert len(inliers) == 20
    assert np.abs(t.matrix() - np.array([[1, 0, 5], [0, 1, 7]])).max() <= 1e-9


def test_ransac_robust_to_30_percent_outliers(rng):
    true_t = AffineTransform(1.02, 0.03, 8.0, -0.02, 0.98, -5.0)
    inl = rng.uniform(0, 256, (70, 2))
    mapped = true_t.apply(inl) + rng.normal(0.0, 0.5, (70, 2))
    out_a = rng.uniform(0, 256, (30, 2))
    out_b = rng.uniform(0, 256, (30, 2))
    pa = np.vstack([inl, out_a])
    pb = np.vstack([mapped, out_b])
    matches, kps_a, kps_b = pairs_to_inputs(pa, pb)
    t, inliers = estimate_affine_ransac(matches, kps_a, kps_b, RansacConfig(seed=3))
    corners = np.array([[0, 0], [255, 0], [0, 255], [255, 255]], dtype=np.float64)
    err = np.linalg.norm(t.apply(corners) - true_t.apply(corners), axis=1).max()
    assert err <= 1.0
    assert len(inliers) >= 60


def test_ransac_requires_three_matches(rng):
    pts = rng.uniform(0, 10, (2, 2))
    matches, kps_a, kps_b = pairs_to_inputs(pts, pts)
    with pytest.raises(InsufficientMatchesError):
        estimate_affine_ransac(matches, kps_a, kps_b)


def test_ransac_collinear_points_rejected():
    pts = np.array([[float(i), 2.0 * i + 1.0] for i in range(10)])
    matches, kps_a, kps_b = pairs_to_inputs(pts, pts)
    with pytest.raises(DegenerateGeometryError):
        estimate_affine_ransac(matches, kps_a, kps_b, RansacConfig(max_iterations=50))


def test_ransac_deterministic_given_seed(rng):
    pa = rng.uniform(0, 200, (40, 2))
    pb = pa + rng.normal(0, 1.0, (40, 2))
    matches, kps_a, kps_b = pairs_to_inputs(pa, pb)
    t1, i1 = estimate_affine_ransac(matches, kps_a, kps_b, RansacConfig(seed=11))
    t2, i2 = estimate_affine_ransac(matches, kps_a, kps_b, RansacConfig(seed=11))
    assert t1 == t2 and i1 == i2


def test_ransac_mean_residual_below_threshold(rng):
    pa = rng.uniform(0, 200, (50, 2))
    pb = pa + rng.normal(0, 0.8, (50, 2))
    matches, kps_a, kps_b = pairs_to_inputs(pa, pb)
    cfg = RansacConfig(seed=5)
    t, inliers = estimate_affine_ransac(matches, kps_a, kps_b, cfg)
    res = np.linalg.norm(t.apply(pa[inliers]) - pb[inliers], axis=1)
    assert res.mean() <= cfg.inlier_threshold


# --- validity mask and inscribed rectangle ---------------------------------


def test_binarize_trivial_masks():
    ones = ImageBuffer(np.ones((6, 6)), Colorspace.GRAY)
    zeros = ImageBuffer(np.zeros((6, 6)), Colorspace.GRAY)
    assert binarize_validity(ones).data.min() == 1.0
    assert binarize_validity(zeros).data.max() == 0.0


def test_binarize_kills_fractional_warp_edges():
    ones = ImageBuffer(np.ones((12, 12)), Colorspace.GRAY)
    warped, _ = warp_affine(ones, AffineTransform.translation(0.5, 0.5), 12, 12)
    binary = binarize_validity(warped)
    # The half-pixel shifted border row/column interpolates to fractions.
    assert binary.plane(0)[0, :].max() == 0.0
    assert binary.plane(0)[:, 0].max() == 0.0
    assert binary.plane(0)[2:, 2:].min() == 1.0


def test_inscribed_rect_full_mask():
    mask = ImageBuffer(np.ones((10, 10)), Colorspace.MASK)
    assert largest_inscribed_rect(mask) == CropRect(0, 0, 10, 10)


def test_inscribed_rect_tie_break_corner_hole():
    grid = np.ones((10, 10))
    grid[0, 0] = 0.0
    rect = largest_inscribed_rect(ImageBuffer(grid, Colorspace.MASK))
    area, best = max_rectangle_oracle(grid.astype(bool))
    assert area == 90
    assert rect == CropRect(0, 1, 10, 9)
    assert (rect.x, rect.y, rect.w, rect.h) == best


def test_inscribed_rect_matches_oracle_on_random_masks(rng):
    for _ in range(100):
        h, w = rng.integers(3, 13, size=2)
        grid = rng.random((h, w)) < 0.7
        if not grid.any():
            continue
        rect = largest_inscribed_rect(ImageBuffer(grid.astype(np.float64), Colorspace.MASK))
        area, _ = max_rectangle_oracle(grid)
        assert rect.w * rect.h == area
        assert grid[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w].all()


def test_inscribed_rect_empty_mask_errors():
    mask = ImageBuffer(np.zeros((5, 5)), Colorspace.MASK)
    with pytest.raises(EmptyMaskError):
        largest_inscribed_rect(mask)


# --- crop mapping -----------------------------------------------------------


def test_map_crop_identity_ratio_one():
    rect = CropRect(10, 10, 20, 20)
    assert map_crop_to_lr(rect, AffineTransform.identity(), 1.0) == rect


def test_map_crop_translation():
    rect = CropRect(10, 10, 20, 20)
    out = map_crop_to_lr(rect, AffineTransform.translation(5.0, 7.0), 1.0)
    assert out == CropRect(5, 3, 20, 20)


def test_map_crop_pure_scaling():
    rect = CropRect(8, 8, 40, 40)
    out = map_crop_to_lr(rect, AffineTransform.identity(), 0.25)
    assert out == CropRect(2, 2, 10, 10)


def test_map_crop_degenerate_errors():
    rect = CropRect(0, 0, 2, 2)
    with pytest.raises(ImageSizeError):
        map_crop_to_lr(rect, AffineTransform.identity(), 0.1)


# --- full pipeline ----------------------------------------------------------


def test_register_self_pair_recovers_identity():
    img = make_textured_rgb(21, size=192)
    lr_aligned, hr_aligned, result = register_pair(img, img)
    corners = np.array([[0, 0], [191, 0], [0, 191], [191, 191]], dtype=np.float64)
    disp = np.linalg.norm(result.transform.apply(corners) - corners, axis=1).max()
    assert disp <= 0.5
    assert result.crop_hr.w >= 190 and result.crop_hr.h >= 190
    assert lr_aligned.data.shape == hr_aligned.data.shape


def test_register_recovers_known_warp_and_alignment_error_is_small(rng):
    img = make_textured_rgb(22, size=256)
    t = AffineTransform(
        1.01 * np.cos(0.04), -1.01 * np.sin(0.04), 5.0,
        1.01 * np.sin(0.04), 1.01 * np.cos(0.04), -3.0,
    )
    warped, _ = warp_affine(img, t, img.width, img.height)
    from srpair.filters import NoiseSpec, add_gaussian_noise

    raw_lr = add_gaussian_noise(warped, NoiseSpec(0.01, 99))
    lr_aligned, hr_aligned, result = register_pair(raw_lr, img)
    mad = np.abs(luma_y(lr_aligned) - luma_y(hr_aligned)).mean()
    assert mad <= 0.03
    assert lr_aligned.data.shape == hr_aligned.data.shape


def test_register_uniform_pair_fails_at_feature_stage():
    flat = ImageBuffer(np.full((64, 64, 3), 0.5))
    with pytest.raises(AlignmentError) as exc:
        register_pair(flat, flat)
    assert exc.value.stage == "features"


def test_register_is_deterministic():
    img = make_textured_rgb(23, size=256)
    t = AffineTransform.translation(4.0, -2.0)
    warped, _ = warp_affine(img, t, img.width, img.height)
    r1 = register_pair(warped, img)[2]
    r2 = register_pair(warped, img)[2]
    assert r1 == r2


def test_register_exclusion_rectangles_drop_matches():
    img = make_textured_rgb(25, size=256)
    # Excluding a horizontal band: registration still succeeds from the
    # rest, and no surviving match endpoint lies inside the band.
    band = CropRect(0, 96, 256, 64)
    diag: dict = {}
    _, _, result = register_pair(
        img, img, RegistrationConfig(exclude=(band,)), diagnostics=diag
    )
    assert len(result.inliers) >= 12
    for m in diag["matches"]:
        assert not band.contains(diag["kps_a"][m.idx_a].x, diag["kps_a"][m.idx_a].y)
        assert not band.contains(diag["kps_b"][m.idx_b].x, diag["kps_b"][m.idx_b].y)


def test_register_diagnostics_capture_filter_verdicts():
    img = make_textured_rgb(26, size=192)
    diag: dict = {}
    register_pair(img, img, diagnostics=diag)
    assert diag["matches"]
    assert diag["kept_gms"] <= set(range(len(diag["matches"])))
    assert diag["kept_mlc"] <= set(range(len(diag["matches"])))
    # Self-registration: every candidate satisfies the location constraint.
    assert diag["kept_mlc"] == set(range(len(diag["matches"])))


def test_register_scale_pair_crop_dims_consistent():
    from srpair.resample import resize_bicubic

    img = make_textured_rgb(24, size=256)
    raw_lr = resize_bicubic(img, 0.5, antialias=True)
    lr_aligned, hr_aligned, result = register_pair(raw_lr, img)
    assert lr_aligned.data.shape == hr_aligned.data.shape
    assert result.crop_lr.w == pytest.approx(result.crop_hr.w * 0.5, abs=1.0)
    assert result.crop_lr.h == pytest.approx(result.crop_hr.h * 0.5, abs=1.0)
