import math
import statistics
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from kbmom.estimators import (
    BOOTSTRAP, PARTITION, BlockPlan, BreakdownBoundWarning, bmom, bmom_breakdown_limit,
    clean_block_probability, lower_median, mc_breakdown, mom, mom_breakdown, plan_bounds,
    prob_breakdown_bound,
)
from kbmom.estimators import _block_means
from kbmom.exceptions import InfeasibleError, InvalidPlanError


@pytest.mark.parametrize("values, expected", [([5], 5), ([1, 2, 3], 2), ([3, 1, 2, 4], 2)])
def test_lower_median_examples(values, expected):
    assert lower_median(values) == expected


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_lower_median_matches_statistics(values):
    assert lower_median(values) == statistics.median_low(values)


def test_lower_median_empty():
    with pytest.raises(ValueError):
        lower_median([])


def test_plan_validation():
    with pytest.raises(InvalidPlanError):
        BlockPlan(0, 3)
    with pytest.raises(InvalidPlanError):
        BlockPlan(2, 3, "other")
    with pytest.raises(InvalidPlanError):
        mom(np.arange(6.0), BlockPlan(4, 2, PARTITION))
    with pytest.raises(InvalidPlanError):
        mom(np.arange(6.0), BlockPlan(2, 3, BOOTSTRAP))
    with pytest.raises(InvalidPlanError):
        bmom(np.arange(6.0), BlockPlan(2, 3, PARTITION))


def test_mom_given_blocks():
    x = np.arange(1.0, 7.0)
    means = _block_means(x, np.array([[0, 1], [2, 3], [4, 5]]))
    assert means.tolist() == [1.5, 3.5, 5.5]
    assert lower_median(means) == 3.5
    assert mom(x, BlockPlan(6, 1, PARTITION), 0) == 3.5


def test_mom_singletons_lower_median():
    x = np.array([10.0, 10.0, 10.0, 1000.0])
    assert mom(x, BlockPlan(1, 4, PARTITION), 3) == 10.0


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_subnormal=False), min_size=1, max_size=40),
       st.integers(0, 2**32))
def test_mom_single_block_is_mean(values, seed):
    x = np.array(values)
    got = mom(x, BlockPlan(len(x), 1, PARTITION), seed)
    want = math.fsum(values) / len(values)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.integers(0, 2**32))
def test_mom_unit_blocks_is_lower_median(values, seed):
    x = np.array(values)
    assert mom(x, BlockPlan(1, len(x), PARTITION), seed) == statistics.median_low(values)


@given(st.floats(-1e3, 1e3), st.integers(1, 30), st.integers(1, 8), st.integers(1, 8))
def test_constant_sample(c, n, nb, B):
    x = np.full(n, c)
    assert bmom(x, BlockPlan(nb, B), 1) == pytest.approx(c, rel=1e-12, abs=1e-12)


def test_bmom_deterministic():
    x = np.random.default_rng(0).standard_normal(200)
    plan = BlockPlan(10, 51)
    assert bmom(x, plan, 42) == bmom(x, plan, 42)


def test_bmom_is_one_of_the_block_means():
    x = np.random.default_rng(1).standard_normal(50)
    v = bmom(x, BlockPlan(5, 7), 3)
    from kbmom._rng import PHASE_MC, stream
    idx = stream(3, PHASE_MC).integers(0, 50, size=(7, 5))
    assert v in set(x[idx].mean(axis=1).tolist())


def test_bmom_vector_sample_per_coordinate():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((40, 3))
    v = bmom(X, BlockPlan(4, 9), 5)
    assert v.shape == (3,)
    for j in range(3):
        assert v[j] == bmom(X[:, j], BlockPlan(4, 9), 5)


def test_bmom_resists_single_outlier():
    x = np.array([0.0, 0.0, 0.0, 0.0, 1e9])
    plan = BlockPlan(1, 1001)
    vals = [bmom(x, plan, s) for s in range(10000)]
    assert set(vals) <= {0.0, 1e9}
    frac = sum(v == 0.0 for v in vals) / len(vals)
    assert frac > 0.99
    # binomial oracle for one seed
    assert binom.sf(500, 1001, 0.8) > 0.99


@pytest.mark.parametrize("B, n, want", [(10, 100, Fraction(1, 20)), (1, 10, 0), (100, 100, Fraction(1, 2))])
def test_mom_breakdown(B, n, want):
    assert mom_breakdown(BlockPlan(1 if B == 100 else 2, B), n) == want


def test_bmom_breakdown_limit():
    assert bmom_breakdown_limit(1) == 0.5
    assert bmom_breakdown_limit(18) == pytest.approx(1 - 2 ** (-1 / 18), rel=1e-14)
    assert bmom_breakdown_limit(18) > 1 / 36


@given(st.integers(2, 10000))
def test_bmom_limit_above_half_over_size(nb):
    # equality at n_B = 1
    assert bmom_breakdown_limit(nb) > 1 / (2 * nb)


def test_prob_bound_values():
    assert prob_breakdown_bound(100, 0, 5, 8) == pytest.approx(1 - math.exp(-8 / 2))
    D = (1 - 9 / 600) ** 18 - 0.5
    assert prob_breakdown_bound(600, 9, 18, 20) == pytest.approx(1 - math.exp(-40 * D * D), rel=1e-12)
    assert prob_breakdown_bound(600, 9, 18, 20) == pytest.approx(0.935, abs=1e-3)
    assert prob_breakdown_bound(600, 9, 18, 250) > 1 - 1e-14


def test_prob_bound_vacuous_warns():
    with pytest.warns(BreakdownBoundWarning):
        assert prob_breakdown_bound(100, 10, 50, 10) == 0.0


def test_plan_bounds():
    b = plan_bounds(600, 9, 0.01)
    assert b.n_B_max == 45
    q = 1 - 9 / 600
    assert q**45 > 0.5 >= q**46
    assert plan_bounds(600, 9, 0.01, block_size=18).B_min_at == 34
    D = q**18 - 0.5
    assert 33 < math.log(100) / (2 * D * D) < 34


def test_plan_bounds_unbounded_and_infeasible():
    b = plan_bounds(100, 0, 0.05)
    assert b.unbounded and b.n_B_max is None
    with pytest.raises(InfeasibleError):
        plan_bounds(10, 5, 0.05)
    with pytest.raises(InfeasibleError):
        plan_bounds(600, 9, 0.01, block_size=46)


def test_clean_block_probability():
    assert clean_block_probability(600, 9, 18) == pytest.approx(0.985**18)


def test_mc_no_corruption():
    assert mc_breakdown(50, 0, 5, 3, 100, 0).mc_estimate == 1.0


def test_mc_above_hoeffding():
    r = mc_breakdown(600, 9, 18, 20, 10000, 7)
    assert r.mc_estimate >= 0.935 - 0.01
    assert r.prob_lower_bound == pytest.approx(0.935, abs=1e-3)


def test_mc_singletons_binomial():
    r = mc_breakdown(1000, 400, 1, 1001, 10000, 3)
    assert r.mc_estimate >= 0.99
    # exact binomial value lies within 4 standard errors
    exact = binom.sf(500, 1001, 0.6)
    assert abs(r.mc_estimate - exact) <= 4 * math.sqrt(exact * (1 - exact) / 10000) + 1e-4


def test_mc_worker_independent():
    a = mc_breakdown(300, 20, 10, 15, 2000, 11, workers=1)
    b = mc_breakdown(300, 20, 10, 15, 2000, 11, workers=4)
    assert a.mc_estimate == b.mc_estimate


def test_mc_vacuous_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mc_breakdown(100, 30, 20, 5, 50, 0)
