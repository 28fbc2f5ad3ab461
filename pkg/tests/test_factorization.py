import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarascc.errors import InputError
from sarascc.factorization import (NonNegMatrix, SolverConfig, make_nonneg, nmf_factorize,
                                   onmtf_first_layer, orthogonality_residual, tri_update_ratios)

from .planted import planted_onmtf


def frob_half(X, A):
    """1/2 squared Frobenius distance by explicit summation."""
    total = 0.0
    for x, a in zip(np.ravel(X), np.ravel(A)):
        total += (x - a) ** 2
    return 0.5 * total


def test_make_nonneg_shift():
    X = np.array([[1.0, -3.0], [0.5, 2.0]])
    nn = make_nonneg(X)
    assert nn.offset == 3.0
    np.testing.assert_array_equal(nn.data, X + 3.0)


def test_make_nonneg_identity():
    X = np.array([[0.0, 1.0], [2.0, 3.0]])
    nn = make_nonneg(X)
    assert nn.offset == 0.0
    np.testing.assert_array_equal(nn.data, X)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_make_nonneg_minimum_is_zero(seed):
    X = np.random.default_rng(seed).normal(size=(5, 7))
    nn = make_nonneg(X)
    had_negative = X.min() < 0
    assert (nn.data.min() == 0.0) == had_negative or X.min() == 0.0
    assert nn.data.min() >= 0


def test_non_finite_and_negative_rejected():
    with pytest.raises(InputError):
        make_nonneg([[np.nan, 1.0]])
    with pytest.raises(InputError):
        NonNegMatrix([[-1.0]])


@pytest.mark.parametrize("kwargs", [{"max_iters": 0}, {"rel_tol": 0}, {"epsilon_guard": 0},
                                    {"eta": 1.5}, {"init": "svd"}])
def test_solver_config_validation(kwargs):
    with pytest.raises(InputError):
        SolverConfig(**kwargs)


def test_nmf_rank_one_exact():
    rng = np.random.default_rng(0)
    X = np.outer(rng.random(12) + 0.1, rng.random(9) + 0.1)
    res = nmf_factorize(X, 1, SolverConfig(seed=1))
    assert res.objective_trace[-1] <= 1e-8 * np.sum(X ** 2)


def test_nmf_zero_data():
    res = nmf_factorize(np.zeros((6, 5)), 2, SolverConfig(seed=0))
    assert res.objective_trace[0] > 0
    assert all(v == 0.0 for v in res.objective_trace[1:])


def test_nmf_monotone_against_independent_objective():
    X = np.random.default_rng(3).random((20, 15))
    seen = []
    res = nmf_factorize(X, 5, SolverConfig(seed=3, max_iters=300), callback=lambda W, H: seen.append(frob_half(X, W @ H)))
    assert all(b <= a + 1e-10 for a, b in zip(seen, seen[1:]))
    np.testing.assert_allclose(seen, res.objective_trace[1:], rtol=1e-10)


def test_nmf_rank_bounds():
    with pytest.raises(InputError):
        nmf_factorize(np.ones((3, 4)), 0)
    with pytest.raises(InputError):
        nmf_factorize(np.ones((3, 4)), 4)


def test_nmf_deterministic():
    X = np.random.default_rng(1).random((8, 6))
    a = nmf_factorize(X, 3, SolverConfig(seed=5, max_iters=50))
    b = nmf_factorize(X, 3, SolverConfig(seed=5, max_iters=50))
    assert a.objective_trace == b.objective_trace
    np.testing.assert_array_equal(a.W, b.W)


def test_onmtf_diagonal_exact():
    X = np.diag([3.0, 1.0, 2.0, 5.0, 0.5])
    layer = onmtf_first_layer(X, 5)
    assert layer.objective <= 1e-6 * np.sum(X ** 2)


@pytest.mark.parametrize("r", [4, 8])
def test_onmtf_planted(r):
    X = planted_onmtf(np.random.default_rng(r), r)
    layer = onmtf_first_layer(X, r, SolverConfig(seed=r))
    assert layer.objective <= 1e-4 * np.sum(X ** 2)
    assert layer.orth_u <= 0.05 and layer.orth_v <= 0.05
    assert layer.orth_u == pytest.approx(orthogonality_residual(layer.U))


@pytest.mark.parametrize("init", ["cocluster", "random"])
def test_onmtf_non_negative_and_not_worse_than_start(init):
    X = np.random.default_rng(2).random((12, 10))
    layer = onmtf_first_layer(X, 3, SolverConfig(seed=2, max_iters=400, init=init))
    for M in (layer.U, layer.W, layer.V):
        assert M.min() >= 0
    assert np.all(np.isfinite(layer.objective_trace))
    assert layer.objective <= layer.objective_trace[0] * (1 + 1e-12)
    np.testing.assert_allclose(layer.objective, frob_half(X, layer.U @ layer.W @ layer.V.T), rtol=1e-9)


def test_onmtf_deterministic():
    X = np.random.default_rng(4).random((10, 9))
    a = onmtf_first_layer(X, 3, SolverConfig(seed=8, max_iters=200))
    b = onmtf_first_layer(X, 3, SolverConfig(seed=8, max_iters=200))
    assert a.objective_trace == b.objective_trace
    for x, y in ((a.U, b.U), (a.W, b.W), (a.V, b.V)):
        np.testing.assert_array_equal(x, y)


def test_onmtf_fixed_point_on_flat_rank_one():
    X = np.ones((6, 4))
    cfg = SolverConfig()
    layer = onmtf_first_layer(X, 1, cfg)
    assert layer.termination == "rel-tol"
    assert layer.final_ratio_deviation <= 10 * cfg.rel_tol
    for q in tri_update_ratios(X, layer.U, layer.W, layer.V):
        assert np.max(np.abs(q - 1)) <= 10 * cfg.rel_tol


@pytest.mark.parametrize("seed", range(3))
def test_onmtf_fixed_point_on_generic_data(seed):
    # every update ratio of the last sweep within 10 rel_tol of 1 once the
    # objective-change rule has fired
    X = np.random.default_rng(seed).random((20, 15))
    cfg = SolverConfig(seed=seed)
    layer = onmtf_first_layer(X, 3, cfg)
    assert layer.termination == "rel-tol"
    assert layer.final_ratio_deviation <= 10 * cfg.rel_tol


def test_onmtf_rank_bounds():
    with pytest.raises(InputError):
        onmtf_first_layer(np.ones((3, 5)), 4)


def test_report_keys():
    layer = onmtf_first_layer(np.eye(3), 3)
    assert set(layer.report()) == {"objective_trace", "orth_u", "orth_v", "iters", "termination"}
