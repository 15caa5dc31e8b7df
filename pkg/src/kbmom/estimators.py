"""Median-of-means and bootstrap median-of-means mean estimation, with
closed-form and Monte-Carlo breakdown-point tools."""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._rng import PHASE_MC, as_seed, stream
from .exceptions import InfeasibleError, InvalidPlanError

PARTITION = "partition"
BOOTSTRAP = "bootstrap"


class BreakdownBoundWarning(RuntimeWarning):
    """The Hoeffding bound is vacuous because blocks are corrupted w.p. >= 1/2."""


@dataclass(frozen=True)
class BlockPlan:
    block_size: int
    block_count: int
    mode: str = BOOTSTRAP

    def __post_init__(self):
        if self.mode not in (PARTITION, BOOTSTRAP):
            raise InvalidPlanError(f"unknown block mode {self.mode!r}")
        if int(self.block_size) < 1 or int(self.block_count) < 1:
            raise InvalidPlanError("block_size and block_count must be >= 1")

    def check(self, n):
        if self.mode == PARTITION and self.block_size * self.block_count > n:
            raise InvalidPlanError(
                f"partition plan needs B*n_B <= n, got {self.block_count}*{self.block_size} > {n}"
            )


@dataclass(frozen=True)
class BreakdownReport:
    deterministic_bdp: Fraction
    bmom_limit: float
    prob_lower_bound: float
    mc_estimate: float
    mc_trials: int

    @property
    def mc_stderr(self):
        p = self.mc_estimate
        return math.sqrt(p * (1.0 - p) / self.mc_trials)


@dataclass(frozen=True)
class PlanBounds:
    """Block-size ceiling and block-count floor for a target failure risk.

    ``n_B_max`` is ``None`` when ``unbounded`` (no corruption). ``B_min`` is
    evaluated at ``n_B_max`` (or at D = 1/2 when unbounded); ``B_min_at`` at
    the caller's block size when one was given.
    """

    n_B_max: Optional[int]
    B_min: int
    B_min_at: Optional[int] = None
    block_size: Optional[int] = None
    unbounded: bool = False


def _sample(values):
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 0 or x.shape[0] < 1:
        raise ValueError("sample must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return x


def lower_median(values):
    """Element of ascending rank ``ceil(B/2)``; always a member of ``values``."""
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("median of an empty list")
    r = (a.size + 1) // 2 - 1
    return float(np.partition(a, r)[r])


def _lower_median_cols(a):
    r = (a.shape[0] + 1) // 2 - 1
    return np.partition(a, r, axis=0)[r]


def _block_means(x, blocks):
    # fsum per block: exact rounding keeps B=1 identical to the plain mean
    if x.ndim == 1:
        return np.array([math.fsum(x[b]) / len(b) for b in blocks])
    return np.array([[math.fsum(col) / len(b) for col in x[b].T] for b in blocks])


def mom(sample, plan, rng=None):
    """Median-of-means over disjoint blocks.

    Indices are shuffled once with ``rng`` and cut into ``block_count``
    consecutive segments of ``block_size``; leftover points are unused.
    Works coordinatewise on an ``(n, p)`` sample.
    """
    x = _sample(sample)
    if plan.mode != PARTITION:
        raise InvalidPlanError("mom needs a partition plan")
    n = x.shape[0]
    plan.check(n)
    perm = stream(as_seed(rng), PHASE_MC).permutation(n)
    blocks = perm[: plan.block_size * plan.block_count].reshape(plan.block_count, plan.block_size)
    means = _block_means(x, blocks)
    if x.ndim == 1:
        return lower_median(means)
    return _lower_median_cols(means)


def bmom(sample, plan, rng=None):
    """Bootstrap median-of-means.

    Draws ``B * n_B`` indices uniformly with replacement, cuts them into
    ``B`` consecutive blocks and returns the lower median of the block
    means. For an ``(n, p)`` sample the same blocks are used for every
    coordinate and the median is taken per coordinate.
    """
    x = _sample(sample)
    if plan.mode != BOOTSTRAP:
        raise InvalidPlanError("bmom needs a bootstrap plan")
    n = x.shape[0]
    B, nB = plan.block_count, plan.block_size
    idx = stream(as_seed(rng), PHASE_MC).integers(0, n, size=(B, nB))
    means = x[idx].mean(axis=1)
    if x.ndim == 1:
        return lower_median(means)
    return _lower_median_cols(means)


def mom_breakdown(plan, n):
    """Deterministic breakdown point ``floor(B/2)/n`` of MOM."""
    if plan.mode == PARTITION:
        plan.check(n)
    return Fraction(plan.block_count // 2, n)


def bmom_breakdown_limit(block_size):
    """Almost-sure limit ``1 - 2**(-1/n_B)`` of the bMOM breakdown point as B grows."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    return -math.expm1(-math.log(2.0) / block_size)


def clean_block_probability(n, m, block_size):
    """Probability that one bootstrap block avoids all ``m`` corrupted indices."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    return (1.0 - m / n) ** block_size


def prob_breakdown_bound(n, m, block_size, block_count):
    """Hoeffding lower bound on the probability that bMOM stays bounded.

    Returns 0 and emits :class:`BreakdownBoundWarning` when a block is
    corrupted with probability at least 1/2.
    """
    D = clean_block_probability(n, m, block_size) - 0.5
    if D <= 0:
        warnings.warn(
            f"(1-m/n)^n_B = {D + 0.5:.6g} <= 1/2, bound is vacuous",
            BreakdownBoundWarning,
            stacklevel=2,
        )
        return 0.0
    return -math.expm1(-2.0 * block_count * D * D)


def _b_min(D, target_risk):
    return math.floor(math.log(1.0 / target_risk) / (2.0 * D * D)) + 1


def plan_bounds(n, m, target_risk, block_size=None):
    """Largest safe block size and smallest block count for risk ``target_risk``.

    ``n_B_max`` is the largest integer with ``(1-m/n)**n_B > 1/2``; the block
    count floor is the smallest integer strictly above
    ``log(1/R) / (2 D**2)`` with ``D = (1-m/n)**n_B - 1/2``.
    """
    if not 0 <= m < n:
        raise ValueError("need 0 <= m < n")
    if not 0 < target_risk < 1:
        raise ValueError("target_risk must lie in (0, 1)")
    at = None
    if m == 0:
        if block_size is not None:
            at = _b_min(0.5, target_risk)
        return PlanBounds(None, _b_min(0.5, target_risk), at, block_size, unbounded=True)
    q = 1.0 - m / n
    limit = math.log(2.0) / -math.log(q)
    n_B_max = math.ceil(limit) - 1
    while n_B_max >= 1 and q**n_B_max <= 0.5:
        n_B_max -= 1
    while q ** (n_B_max + 1) > 0.5:
        n_B_max += 1
    if n_B_max < 1:
        raise InfeasibleError(
            f"m/n = {m}/{n} >= 1/2: no block size keeps blocks clean with probability > 1/2"
        )
    if block_size is not None:
        D = q**block_size - 0.5
        if D <= 0:
            raise InfeasibleError(
                f"block size {block_size} exceeds the largest safe size {n_B_max}"
            )
        at = _b_min(D, target_risk)
    return PlanBounds(n_B_max, _b_min(q**n_B_max - 0.5, target_risk), at, block_size)


def _mc_chunk(seed, n, m, block_size, block_count, trials):
    hits = 0
    for t in trials:
        idx = stream(seed, PHASE_MC, t).integers(0, n, size=(block_count, block_size))
        clean = np.count_nonzero(np.all(idx >= m, axis=1))
        hits += 2 * clean > block_count
    return hits


def mc_breakdown(n, m, block_size, block_count, trials, rng=None, workers=1):
    """Monte-Carlo estimate of the probability that bMOM stays bounded.

    Rows ``0..m-1`` play the corrupted indices. A trial succeeds when
    strictly more than half of its blocks avoid them. Trial ``t`` draws
    from its own stream, so the estimate does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    seed = as_seed(rng)
    if m == 0:
        hits = trials
    else:
        chunks = np.array_split(np.arange(trials), max(1, int(workers)))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                hits = sum(ex.map(lambda c: _mc_chunk(seed, n, m, block_size, block_count, c), chunks))
        else:
            hits = _mc_chunk(seed, n, m, block_size, block_count, chunks[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BreakdownBoundWarning)
        bound = prob_breakdown_bound(n, m, block_size, block_count)
    return BreakdownReport(
        deterministic_bdp=Fraction(block_count // 2, n),
        bmom_limit=bmom_breakdown_limit(block_size),
        prob_lower_bound=bound,
        mc_estimate=hits / trials,
        mc_trials=trials,
    )
