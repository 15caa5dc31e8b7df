"""Containers shared by the clustering, metrics and harness modules."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

OUTLIER_LABEL = -1


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` point matrix with optional outlier mask and true labels.

    Arrays are copied and made read-only on construction. Rows appended by
    cluster-type contamination carry ``OUTLIER_LABEL`` in ``true_labels``.
    """

    points: np.ndarray
    outlier_mask: Optional[np.ndarray] = None
    true_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty n x p matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        object.__setattr__(self, "points", _frozen(pts, np.float64))
        n = pts.shape[0]
        if self.outlier_mask is not None:
            mask = _frozen(self.outlier_mask, bool)
            if mask.shape != (n,):
                raise ValueError(f"outlier_mask must have length {n}")
            object.__setattr__(self, "outlier_mask", mask)
        if self.true_labels is not None:
            labels = _frozen(self.true_labels, np.int64)
            if labels.shape != (n,):
                raise ValueError(f"true_labels must have length {n}")
            object.__setattr__(self, "true_labels", labels)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def p(self):
        return self.points.shape[1]

    @property
    def clean_mask(self):
        if self.outlier_mask is None:
            return np.ones(self.n, dtype=bool)
        return ~self.outlier_mask


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """``K`` centers with their within-cluster variances."""

    centers: np.ndarray
    within_variances: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if c.shape[0] < 1 or not np.all(np.isfinite(c)):
            raise ValueError("centers must be a finite K x p matrix with K >= 1")
        object.__setattr__(self, "centers", _frozen(c, np.float64))
        v = self.within_variances
        v = np.zeros(c.shape[0]) if v is None else np.asarray(v, dtype=np.float64)
        if v.shape != (c.shape[0],) or np.any(v < 0):
            raise ValueError("within_variances must be K non-negative reals")
        object.__setattr__(self, "within_variances", _frozen(v, np.float64))

    @property
    def K(self):
        return self.centers.shape[0]


@dataclass(eq=False)
class ClusteringResult:
    labels: np.ndarray
    centroids: CentroidSet
    risk_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    # trimmed k-means only: rows used in the last center update
    retained_mask: Optional[np.ndarray] = None

    @property
    def centers(self):
        return self.centroids.centers
