"""Descriptor matching and the two geometric match filters.

The location-constraint filter keeps a match only when its endpoints are
within a fraction alpha of the image extent of each other on both axes;
the grid filter keeps a match only when enough other matches move the same
way between the same neighborhoods of grid cells.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .sift import Keypoint


@dataclass(frozen=True)
class Match:
    idx_a: int
    idx_b: int
    distance: float


@dataclass(frozen=True)
class MlcConfig:
    """Coordinate-proximity thresholds: t_x = alpha * M, t_y = alpha * N."""

    alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class GmsConfig:
    """Grid-statistics filter: grid_cells per axis, support threshold factor."""

    grid_cells: int = 20
    tau_factor: float = 6.0

    def __post_init__(self):
        if self.grid_cells < 2:
            raise ValueError(f"grid_cells must be >= 2, got {self.grid_cells}")
        if self.tau_factor <= 0:
            raise ValueError(f"tau_factor must be positive, got {self.tau_factor}")


def match_descriptors(da: np.ndarray, db: np.ndarray, ratio: float = 0.8) -> list[Match]:
    """Nearest-neighbor matches from A to B under Lowe's ratio test.

    Each A descriptor contributes at most one match, kept iff the nearest/
    second-nearest distance ratio is below ``ratio``. With a single B
    descriptor the ratio test cannot be applied and the match is kept;
    the geometric filters police such matches downstream.
    """
    da = np.asarray(da, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    if len(da) == 0 or len(db) == 0:
        return []
    # Squared distances via the expansion ||a-b||^2 = ||a||^2 + ||b||^2 - 2ab.
    sq = (
        np.sum(da**2, axis=1)[:, None]
        + np.sum(db**2, axis=1)[None, :]
        - 2.0 * (da @ db.T)
    )
    np.maximum(sq, 0.0, out=sq)
    if db.shape[0] == 1:
        return [Match(i, 0, float(np.sqrt(sq[i, 0]))) for i in range(da.shape[0])]
    rows = np.arange(da.shape[0])
    part = np.argpartition(sq, 1, axis=1)[:, :2]
    pair = np.take_along_axis(sq, part, axis=1)
    first = np.argmin(pair, axis=1)
    j1 = part[rows, first]
    d1 = np.sqrt(pair[rows, first])
    d2 = np.sqrt(pair[rows, 1 - first])
    keep = (d2 == 0.0) | (d1 < ratio * d2)
    return [Match(int(i), int(j1[i]), float(d1[i])) for i in rows[keep]]


def filter_mlc(
    matches: list[Match],
    kps_a: list[Keypoint],
    kps_b: list[Keypoint],
    width: int,
    height: int,
    cfg: MlcConfig | None = None,
) -> list[Match]:
    """Keep matches with |x_a - x_b| <= alpha*width and |y_a - y_b| <= alpha*height."""
    cfg = cfg or MlcConfig()
    tx = cfg.alpha * width
    ty = cfg.alpha * height
    kept = []
    for m in matches:
        pa = kps_a[m.idx_a]
        pb = kps_b[m.idx_b]
        if abs(pa.x - pb.x) <= tx and abs(pa.y - pb.y) <= ty:
            kept.append(m)
    return kept


def _cell_indices(kps, idxs, width, height, g):
    xs = np.array([kps[i].x for i in idxs])
    ys = np.array([kps[i].y for i in idxs])
    cx = np.minimum((xs * g / width).astype(np.int64), g - 1)
    cy = np.minimum((ys * g / height).astype(np.int64), g - 1)
    return cx, cy


def filter_gms(
    matches: list[Match],
    kps_a: list[Keypoint],
    kps_b: list[Keypoint],
    size_a: tuple[int, int],
    size_b: tuple[int, int],
    cfg: GmsConfig | None = None,
) -> list[Match]:
    """Grid-based motion statistics filter.

    Both images are split into grid_cells^2 cells. A match whose endpoints
    fall in cell pair (i, j) is kept iff the number of *other* matches whose
    A endpoint lies in the 3x3 neighborhood of i and whose B endpoint lies
    in the 3x3 neighborhood of j reaches
    tau_factor * sqrt(mean matches per occupied A-cell).
    """
    cfg = cfg or GmsConfig()
    if not matches:
        return []
    g = cfg.grid_cells
    wa, ha = size_a
    wb, hb = size_b
    idx_a = [m.idx_a for m in matches]
    idx_b = [m.idx_b for m in matches]
    ax, ay = _cell_indices(kps_a, idx_a, wa, ha, g)
    bx, by = _cell_indices(kps_b, idx_b, wb, hb, g)

    counts = np.zeros((g, g, g, g), dtype=np.int64)
    np.add.at(counts, (ay, ax, by, bx), 1)
    occupied = np.count_nonzero(np.sum(counts, axis=(2, 3)))
    mean_per_cell = len(matches) / occupied
    tau = cfg.tau_factor * np.sqrt(mean_per_cell)

    # Exact integer sums over the 3x3 neighborhoods on both grids
    # (truncated at grid borders).
    nb = ndimage.correlate(
        counts, np.ones((3, 3, 3, 3), dtype=np.int64), mode="constant", cval=0
    )
    support = nb[ay, ax, by, bx] - 1  # exclude the match itself
    return [m for m, s in zip(matches, support) if s >= tau]


def dump_matches_csv(
    path: str | Path,
    matches: list[Match],
    kps_a: list[Keypoint],
    kps_b: list[Keypoint],
    kept_gms: set[int],
    kept_mlc: set[int],
) -> None:
    """Debug dump: one row per candidate match with filter verdicts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["idx_a", "x_a", "y_a", "idx_b", "x_b", "y_b", "distance", "kept_by_gms", "kept_by_mlc"]
        )
        for i, m in enumerate(matches):
            pa, pb = kps_a[m.idx_a], kps_b[m.idx_b]
            writer.writerow(
                [
                    m.idx_a,
                    f"{pa.x:.3f}",
                    f"{pa.y:.3f}",
                    m.idx_b,
                    f"{pb.x:.3f}",
                    f"{pb.y:.3f}",
                    f"{m.distance:.6f}",
                    int(i in kept_gms),
                    int(i in kept_mlc),
                ]
            )
