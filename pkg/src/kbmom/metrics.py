"""Evaluation criteria computed on the non-polluted rows."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import UndefinedMetricError

ENUMERATION_LIMIT = 8


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    accuracy: float
    ari: float
    distortion_clean: float
    nb_clusters: int

    FIELDS = ("rmse", "accuracy", "ari", "distortion", "nb")

    def as_row(self):
        return (self.rmse, self.accuracy, self.ari, self.distortion_clean, self.nb_clusters)


def _centers(c):
    return np.atleast_2d(np.asarray(getattr(c, "centers", c), dtype=np.float64))


def _best_matching(cost):
    """Minimum-cost row -> column matching of a square or wide cost matrix.

    Enumerates permutations up to ``ENUMERATION_LIMIT`` rows, otherwise
    solves the assignment problem.
    """
    r, c = cost.shape
    if r <= ENUMERATION_LIMIT and c <= ENUMERATION_LIMIT:
        rows = np.arange(r)
        best = math.inf
        for perm in itertools.permutations(range(c), r):
            s = cost[rows, perm].sum()
            if s < best:
                best = s
        return best
    ri, ci = linear_sum_assignment(cost)
    return cost[ri, ci].sum()


def rmse_matched(fitted, true_means):
    """RMSE between fitted and true centers under the best one-to-one matching."""
    F, T = _centers(fitted), _centers(true_means)
    if F.shape != T.shape:
        raise ValueError(f"need equal K and p, got {F.shape} vs {T.shape}")
    cost = ((T[:, None, :] - F[None, :, :]) ** 2).sum(axis=2)
    return math.sqrt(max(_best_matching(cost), 0.0) / T.shape[0])


def _clean(pred, true, clean_mask, minimum, what):
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise ValueError("label arrays must have equal length")
    if clean_mask is not None:
        m = np.asarray(clean_mask, dtype=bool)
        pred, true = pred[m], true[m]
    if pred.size < minimum:
        raise UndefinedMetricError(f"{what} needs at least {minimum} clean rows, got {pred.size}")
    return pred, true


def _contingency(pred, true):
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def accuracy_matched(pred_labels, true_labels, clean_mask=None):
    """Classification rate under the best injective relabelling of predictions."""
    pred, true = _clean(pred_labels, true_labels, clean_mask, 1, "accuracy")
    table = _contingency(pred, true)
    # maximise matches == minimise negated counts; pad so rows <= columns
    if table.shape[0] > table.shape[1]:
        table = table.T
    return float(-_best_matching(-table.astype(np.float64))) / pred.size


def _pairs(x):
    return x * (x - 1) / 2.0


def ari(pred_labels, true_labels, clean_mask=None):
    """Adjusted Rand index; 1 when both sides are a single class."""
    pred, true = _clean(pred_labels, true_labels, clean_mask, 2, "ARI")
    table = _contingency(pred, true)
    index = _pairs(table).sum()
    a = _pairs(table.sum(axis=1)).sum()
    b = _pairs(table.sum(axis=0)).sum()
    expected = a * b / _pairs(pred.size)
    top = (a + b) / 2.0
    if top == expected:
        return 1.0
    return float((index - expected) / (top - expected))


def distortion_clean(dataset, labels, centers, clean_mask=None):
    """Sum of squared distances from clean rows to their assigned centers."""
    X = np.asarray(getattr(dataset, "points", dataset), dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    C = _centers(centers)
    labels = np.asarray(labels)
    if clean_mask is None:
        clean_mask = getattr(dataset, "clean_mask", np.ones(len(labels), bool))
    m = np.asarray(clean_mask, dtype=bool)
    diff = X[m] - C[labels[m]]
    return float((diff * diff).sum())


def nb_clusters_clean(labels, clean_mask=None):
    labels = np.asarray(labels)
    if clean_mask is not None:
        labels = labels[np.asarray(clean_mask, dtype=bool)]
    return int(np.unique(labels).size)


def evaluate(dataset, labels, centers, true_means=None):
    """All five criteria on the dataset's clean rows.

    RMSE is NaN when no true means are given or their count differs from
    the number of fitted centers.
    """
    clean = dataset.clean_mask
    C = _centers(centers)
    rmse = math.nan
    if true_means is not None and _centers(true_means).shape == C.shape:
        rmse = rmse_matched(C, true_means)
    return EvalReport(
        rmse=rmse,
        accuracy=accuracy_matched(labels, dataset.true_labels, clean),
        ari=ari(labels, dataset.true_labels, clean),
        distortion_clean=distortion_clean(dataset, labels, C, clean),
        nb_clusters=nb_clusters_clean(labels, clean),
    )
