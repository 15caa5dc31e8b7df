"""Block-size selection from the median-block risk curve.

For each candidate block size the robust initialisation is run and the
risk of its median block recorded. Once blocks become likely to contain
an outlier the median block turns contaminated and its per-datum risk
jumps; the block size just before the largest jump is selected.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._rng import PHASE_SWEEP, as_seed, derive_seed
from .clustering import KbmomParams, _points, median_block_init
from .data import Dataset
from .exceptions import InvalidPlanError
from .metrics import ari
from . import kernels

JUMP_THRESHOLD = 1.0
_DELTA = 1e-12


@dataclass(frozen=True)
class SweepPoint:
    n_B: int
    median_risk: float
    outliers_in_median_block: int
    clean_ari: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    selected_n_B: int
    breakpoint_found: bool

    def at(self, n_B):
        for pt in self.points:
            if pt.n_B == n_B:
                return pt
        raise KeyError(n_B)

    @property
    def selected(self):
        return self.at(self.selected_n_B)


def auto_grid(n, K, step=5):
    """Multiples of ``step`` from the first one >= 3K up to n // K.

    Per-datum risk of a block scales like ``1 - K/n_B``, so blocks barely
    larger than K show a steep rise that is not due to contamination.
    """
    if step < 1:
        raise InvalidPlanError("grid step must be >= 1")
    start = step * math.ceil(3 * K / step)
    grid = list(range(start, n // K + 1, step))
    if len(grid) < 3:
        raise InvalidPlanError(f"auto grid for n={n}, K={K}, step={step} has fewer than 3 sizes")
    return grid


def detect_breakpoint(points, threshold=JUMP_THRESHOLD):
    """Return ``(n_B, found)`` for the largest relative jump of per-datum risk.

    ``found`` is False when no jump exceeds ``threshold``; the largest grid
    value is returned then.
    """
    pts = sorted(points, key=lambda p: p.n_B)
    if len(pts) < 3:
        raise InvalidPlanError("breakpoint detection needs at least 3 sweep points")
    r = np.array([p.median_risk / p.n_B for p in pts])
    jumps = (r[1:] - r[:-1]) / np.maximum(r[:-1], _DELTA)
    i = int(np.argmax(jumps))
    if jumps[i] > threshold:
        return pts[i].n_B, True
    return pts[-1].n_B, False


def blocksize_sweep(dataset, K, B, grid, rng=None, init_kind="kbmom_kmpp",
                    threshold=JUMP_THRESHOLD, workers=1):
    """Median-block risk, contamination and clean ARI for every block size in ``grid``."""
    grid = sorted(set(int(g) for g in grid))
    if not grid:
        raise InvalidPlanError("empty block-size grid")
    if not isinstance(dataset, Dataset):
        dataset = Dataset(_points(dataset))
    X = dataset.points
    n = X.shape[0]
    if grid[0] <= K or grid[-1] > n // K:
        raise InvalidPlanError(f"grid must lie in (K, n/K] = ({K}, {n // K}], n_B > K is required")
    seed = as_seed(rng)
    mask = dataset.outlier_mask
    clean = dataset.clean_mask
    pts = []
    for nb in grid:
        params = KbmomParams(K=K, B=B, n_B=nb, init_kind=init_kind, workers=workers)
        sel = median_block_init(dataset, params, derive_seed(seed, PHASE_SWEEP, nb))
        n_out = int(mask[sel.block].sum()) if mask is not None else 0
        score = np.nan
        if dataset.true_labels is not None and clean.sum() >= 2:
            labels = kernels.assign(X, sel.centroids.centers)[0]
            score = ari(labels, dataset.true_labels, clean)
        pts.append(SweepPoint(nb, sel.risk, n_out, score))
    if len(pts) < 3:
        raise InvalidPlanError("breakpoint detection needs at least 3 sweep points")
    selected, found = detect_breakpoint(pts, threshold)
    return SweepResult(tuple(pts), selected, found)


SWEEP_HEADER = ("n_B", "median_risk", "outliers_in_median_block", "clean_ari")


def write_sweep_csv(result, path):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for pt in result.points:
            w.writerow((pt.n_B, repr(pt.median_risk), pt.outliers_in_median_block, repr(pt.clean_ari)))
