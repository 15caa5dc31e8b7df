"""Compiled and numpy kernels must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kbmom import _kernels_py as py
from kbmom import kernels

cy = pytest.importorskip("kbmom._kernels")


def _case(seed, n=60, p=2, K=3, B=7, nB=12, dup=False):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, p)) * 3
    if dup:
        X[: n // 2] = X[0]
    idx = g.integers(0, n, size=(B, nB))
    C = X[g.choice(n, K, replace=False)] + g.standard_normal((K, p)) * 0.1
    return X, idx, C, g


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    assert py.BACKEND == "python"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 5), st.booleans())
def test_assign_parity(seed, p, K, dup):
    X, _, C, _ = _case(seed, p=p, K=K, dup=dup)
    a, b = cy.assign(X, C), py.assign(X, C)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])


def test_assign_tie_goes_to_lowest():
    X = np.array([[0.0, 0.0]])
    C = np.array([[1.0, 0.0], [0.0, 1.0]])
    for mod in (cy, py):
        assert mod.assign(X, C)[0][0] == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 5), st.booleans())
def test_block_update_parity(seed, p, K, dup):
    X, idx, C, _ = _case(seed, p=p, K=K, dup=dup)
    for a, b in zip(cy.block_update(X, idx, C), py.block_update(X, idx, C)):
        assert np.array_equal(a, b, equal_nan=True)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.sampled_from([1, 2]),
       st.integers(1, 4), st.booleans())
def test_block_seed_parity(seed, K, power, T, dup):
    X, idx, _, g = _case(seed, K=K, dup=dup)
    u = g.random((idx.shape[0], K, T))
    assert np.array_equal(cy.block_seed(X, idx, u, power), py.block_seed(X, idx, u, power))


def test_block_seed_two_dim_u_equals_single_trial():
    X, idx, _, g = _case(5)
    u = g.random((idx.shape[0], 3))
    for mod in (cy, py):
        assert np.array_equal(mod.block_seed(X, idx, u, 2), mod.block_seed(X, idx, u[..., None], 2))


def test_block_seed_identical_points():
    X = np.ones((10, 2))
    idx = np.arange(10)[None, :]
    u = np.random.default_rng(0).random((1, 3, 2))
    for mod in (cy, py):
        S = mod.block_seed(X, idx, u, 2)
        assert np.array_equal(S[0], np.ones((3, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_block_lloyd_parity(seed, K):
    X, idx, C, _ = _case(seed, K=K, nB=20)
    for a, b in zip(cy.block_lloyd(X, idx, C, 50, 1e-6), py.block_lloyd(X, idx, C, 50, 1e-6)):
        assert np.array_equal(a, b, equal_nan=True)


def test_block_update_hand_case():
    X = np.array([[0.0], [2.0]])
    for mod in (cy, py):
        risk, means, var, valid = mod.block_update(X, np.array([[0, 1]]), np.array([[5.0]]))
        assert valid[0] and risk[0] == 2.0 and means[0, 0, 0] == 1.0 and var[0, 0] == 1.0


def test_block_update_flags_empty_cluster():
    X = np.array([[0.0], [0.1], [0.2]])
    for mod in (cy, py):
        risk, means, var, valid = mod.block_update(X, np.array([[0, 1, 2]]), np.array([[0.0], [100.0]]))
        assert not valid[0]
