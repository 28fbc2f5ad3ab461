import numpy as np
import pytest

from sarascc.errors import ConstraintInfeasibleError, InputError
from sarascc.factorization import SolverConfig, onmtf_first_layer
from sarascc.mlo import (ComponentMatrix, constrained_chain, decomposition_error, mlo_decompose,
                         onmtf_constrained_layer, pooling_matrix, prepare_component,
                         telescoping_residual)
from sarascc.scattering import SarImage

from .planted import planted_constrained, planted_onmtf


def block_average(A, r):
    """Fractional block average by explicit overlap summation over each cell."""
    m, n = A.shape
    out = np.zeros((r, r))
    for k in range(r):
        for l in range(r):
            total = 0.0
            for i in range(m):
                wi = max(0.0, min((k + 1) * m / r, i + 1) - max(k * m / r, i))
                if wi == 0:
                    continue
                for j in range(n):
                    wj = max(0.0, min((l + 1) * n / r, j + 1) - max(l * n / r, j))
                    total += wi * wj * A[i, j]
            out[k, l] = total / ((m / r) * (n / r))
    return out


def frob_sq(X, U, W, V):
    M = U @ W @ V.T
    return sum((X[i, j] - M[i, j]) ** 2 for i in range(X.shape[0]) for j in range(X.shape[1]))


def test_prepare_identity_case():
    A = np.random.default_rng(0).random((5, 5))
    c = prepare_component(A, 5)
    np.testing.assert_array_equal(c.data, A)
    assert c.offset == 0.0


@pytest.mark.parametrize("shape", [(64, 64), (10, 7), (16, 16)])
def test_prepare_constant(shape):
    c = prepare_component(np.full(shape, 2.5), 4)
    np.testing.assert_allclose(c.data, 2.5, rtol=1e-14)


@pytest.mark.parametrize("shape,r", [((64, 64), 16), ((64, 64), 6), ((13, 9), 4)])
def test_pooling_matches_block_average(shape, r):
    A = np.random.default_rng(1).random(shape)
    np.testing.assert_allclose(prepare_component(A, r).data, block_average(A, r), rtol=1e-12, atol=1e-14)


def test_pooling_rows_sum_to_one():
    for n, r in [(64, 16), (7, 3), (5, 5)]:
        np.testing.assert_allclose(pooling_matrix(n, r).sum(axis=1), 1.0, rtol=1e-15)


def test_prepare_complex_image_uses_magnitude():
    data = np.random.default_rng(2).normal(size=(8, 8)) * np.exp(1j)
    c = prepare_component(SarImage(data), 8)
    np.testing.assert_allclose(c.data, np.abs(data), rtol=1e-15)


def test_prepare_shift_and_errors():
    c = prepare_component(np.array([[-1.0, 1.0], [0.0, 2.0]]), 2)
    assert c.offset == 1.0 and c.data.min() == 0.0
    with pytest.raises(InputError):
        prepare_component(np.ones((3, 4)), 5)
    with pytest.raises(InputError):
        prepare_component(np.array([[np.inf]]), 1)
    with pytest.raises(InputError):
        ComponentMatrix(np.ones((2, 3)))


def test_null_component():
    W = np.random.default_rng(3).uniform(0.1, 1, (6, 6))
    layer = onmtf_constrained_layer(W, np.zeros((6, 6)))
    np.testing.assert_array_equal(layer.W_next, W)
    assert layer.objective <= 1e-6 * np.sum(W ** 2)


def test_full_peel():
    W = np.random.default_rng(4).uniform(0.1, 1, (5, 5))
    layer = onmtf_constrained_layer(W, W)
    assert not np.any(layer.W_next)
    assert all(v == pytest.approx(0.5 * np.sum(W ** 2), rel=1e-15) for v in layer.objective_trace)


@pytest.mark.parametrize("r", [4, 8, 16])
def test_planted_layer(r):
    Wi, P, _, _ = planted_constrained(np.random.default_rng(r), r)
    layer = onmtf_constrained_layer(Wi, P, SolverConfig(seed=r), layer=1)
    assert layer.objective <= 1e-4 * np.sum(Wi ** 2)
    assert layer.orth_v <= 0.05
    assert layer.objective == pytest.approx(0.5 * frob_sq(Wi, layer.U, layer.W_next, layer.V), rel=1e-9)
    assert layer.U.min() >= 0 and layer.V.min() >= 0


def test_infeasible_component_raises_with_norm():
    W = np.eye(3)
    P = np.full((3, 3), 0.5)
    with pytest.raises(ConstraintInfeasibleError) as info:
        onmtf_constrained_layer(W, P, layer=2)
    assert info.value.violation_norm == pytest.approx(np.sqrt(6) * 0.5)
    assert info.value.layer == 2


def test_tiny_violation_is_clamped_and_recorded():
    W = np.full((3, 3), 1.0)
    P = W.copy()
    P[0, 0] += 1e-8
    layer = onmtf_constrained_layer(W, P)
    assert layer.W_next.min() == 0.0
    assert layer.violation_norm == pytest.approx(1e-8, rel=1e-6)


def test_layer_shape_mismatch():
    with pytest.raises(InputError):
        onmtf_constrained_layer(np.ones((3, 3)), np.zeros((2, 2)))


def test_empty_chain():
    X = planted_onmtf(np.random.default_rng(0), 4)
    dec = mlo_decompose(X, [], 4)
    assert dec.layers == [] and dec.telescoping_residual == 0.0
    assert len(dec.cores) == 1


def test_null_chain():
    X = planted_onmtf(np.random.default_rng(1), 4)
    dec = mlo_decompose(X, [np.zeros((4, 4))] * 3, 4)
    W1 = dec.first.W
    for W in dec.cores[1:]:
        np.testing.assert_array_equal(W, W1)
    for layer in dec.layers:
        assert layer.objective <= 1e-6 * np.sum(W1 ** 2)


def test_planted_chain_layers_and_telescoping():
    rng = np.random.default_rng(6)
    r, k = 6, 3
    Wi = rng.uniform(0.1, 1.0, (r, r))
    Ws, Ps = [Wi], []
    for _ in range(k):
        W_next = np.round(0.5 * Ws[-1] * 1024) / 1024
        Ps.append(Ws[-1] - W_next)
        Ws.append(W_next)
    layers = constrained_chain(Wi, Ps, SolverConfig(seed=1))
    for i, layer in enumerate(layers):
        np.testing.assert_array_equal(layer.W_next, Ws[i + 1])
        assert layer.objective <= 1e-4 * np.sum(Ws[i] ** 2)
        assert layer.W_next.min() >= 0
    assert telescoping_residual(Wi, Ps, layers[-1].W_next) <= 4 * np.finfo(float).eps * k * Wi.max()


def test_telescoping_exact_on_dyadic_values():
    W1 = np.array([[1.0, 0.75], [0.5, 0.25]])
    Ps = [np.array([[0.25, 0.25], [0.125, 0.0]]), np.array([[0.5, 0.25], [0.25, 0.125]])]
    layers = constrained_chain(W1, Ps)
    assert telescoping_residual(W1, Ps, layers[-1].W_next) == 0.0


def test_layer_independence():
    rng = np.random.default_rng(7)
    Wi = rng.uniform(0.5, 1.0, (5, 5))
    Ps = [0.2 * Wi, 0.2 * Wi, 0.2 * Wi]
    short = constrained_chain(Wi, Ps[:1], SolverConfig(seed=3))
    full = constrained_chain(Wi, Ps, SolverConfig(seed=3))
    for a, b in ((short[0].U, full[0].U), (short[0].V, full[0].V), (short[0].W_next, full[0].W_next)):
        np.testing.assert_array_equal(a, b)
    assert short[0].objective_trace == full[0].objective_trace


def test_decompose_rejects_wrong_component_shape():
    with pytest.raises(InputError):
        mlo_decompose(np.ones((6, 6)), [np.zeros((3, 3))], 4)


def test_decompose_report_shape():
    X = planted_onmtf(np.random.default_rng(2), 4)
    dec = mlo_decompose(X, [np.zeros((4, 4))], 4, SolverConfig(max_iters=200))
    doc = dec.report()
    assert set(doc) == {"rank", "layers", "telescoping_residual"}
    assert set(doc["layers"][0]) == {"objective_final", "orth_v", "iters", "violation_norm"}


def test_decomposition_error_examples():
    X = planted_onmtf(np.random.default_rng(3), 3)
    layer = onmtf_first_layer(X, 3)
    assert decomposition_error([[2.0]], [[1.0]], [[1.0]], [[1.0]]) == 1.0
    U, W, V = np.eye(3), np.diag([1.0, 2.0, 3.0]), np.eye(3)
    assert decomposition_error(U @ W @ V.T, U, W, V) == 0.0
    assert decomposition_error(X, layer.U, layer.W, layer.V) == pytest.approx(2 * layer.objective, rel=1e-9)


def test_decomposition_error_summation_oracle():
    rng = np.random.default_rng(8)
    X, U, W, V = (rng.random((8, 8)) for _ in range(4))
    assert decomposition_error(X, U, W, V) == pytest.approx(frob_sq(X, U, W, V), rel=1e-12)
    with pytest.raises(InputError):
        decomposition_error(X, U, W, rng.random((7, 8)))
