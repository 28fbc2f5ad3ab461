import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarascc.errors import InputError
from sarascc.losses import (FeatureStack, LocalWeightState, cosine_sim, derive_approx_components,
                            gate, gated_weight, global_discrimination_loss, local_pixel_loss,
                            local_weight, positivity_map)

H = 1e-6


def central_diff(fun, x):
    """Central differences of a scalar function over every entry of x."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[idx] += H
        down[idx] -= H
        g[idx] = (fun(up) - fun(down)) / (2 * H)
    return g


def assert_grad_close(analytic, numeric):
    scale = max(np.max(np.abs(numeric)), 1e-12)
    assert np.max(np.abs(analytic - numeric)) <= 1e-5 * scale


def test_cosine_examples():
    a = np.array([1.0, 2.0, -3.0])
    assert cosine_sim(a, a) == 1.0
    assert cosine_sim([1.0, 0.0], [0.0, 2.0]) == 0.0
    assert cosine_sim(a, -a) == -1.0
    with pytest.raises(InputError):
        cosine_sim([0.0, 0.0], [1.0, 1.0])


def test_null_filtering():
    x = np.random.default_rng(0).normal(size=(4, 4, 3))
    parts = derive_approx_components(FeatureStack(x, [x, x, x]))
    assert all(not np.any(p) for p in parts)


def test_linear_schedule():
    K = 4
    x = np.random.default_rng(1).normal(size=(3, 3, 2))
    parts = derive_approx_components(FeatureStack(x, [(1 - i / K) * x for i in range(1, K + 1)]))
    for p in parts:
        np.testing.assert_allclose(p, x / K, rtol=1e-12, atol=1e-15)


def test_telescoping_sum():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(5, 5, 4))
    mids = [rng.normal(size=x.shape) for _ in range(6)]
    parts = derive_approx_components(FeatureStack(x, mids))
    assert len(parts) == 6
    np.testing.assert_array_equal(parts[0], x - mids[0])
    for i in range(1, 6):
        np.testing.assert_array_equal(parts[i], mids[i - 1] - mids[i])
    np.testing.assert_allclose(sum(parts), x - mids[-1], rtol=0, atol=32 * np.finfo(float).eps * np.abs(x).max())


def test_dyadic_telescoping_is_exact():
    x = np.array([1.0, 0.5])
    mids = [np.array([0.75, 0.25]), np.array([0.5, 0.125])]
    parts = derive_approx_components(FeatureStack(x, mids))
    np.testing.assert_array_equal(parts[0] + parts[1], x - mids[-1])


def test_stack_shape_mismatch():
    with pytest.raises(InputError):
        FeatureStack(np.zeros((2, 2)), [np.zeros((2, 3))])


def test_no_negatives_is_zero():
    loss, gp, gn = global_discrimination_loss([0.3, -0.2], np.zeros((2, 0)))
    assert loss == 0.0
    assert gn.shape == (2, 0)
    np.testing.assert_allclose(gp, 0.0, atol=1e-15)


def test_symmetric_pair_is_log_two():
    loss, _, _ = global_discrimination_loss([0.4, -0.1, 0.9], [[0.4], [-0.1], [0.9]])
    assert loss == pytest.approx(3 * math.log(2), rel=1e-14)


def test_positivity_map_range():
    assert positivity_map(-1.0) > 0
    assert positivity_map(1.0) == pytest.approx(1.0 + 1e-6)


def test_discrimination_gradient_fd():
    rng = np.random.default_rng(3)
    sp = rng.uniform(-0.9, 0.9, 4)
    sn = rng.uniform(-0.9, 0.9, (4, 8))
    _, gp, gn = global_discrimination_loss(sp, sn)
    assert_grad_close(gp, central_diff(lambda v: global_discrimination_loss(v, sn)[0], sp))
    assert_grad_close(gn, central_diff(lambda v: global_discrimination_loss(sp, v)[0], sn))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_discrimination_positive_with_negatives(seed, J):
    rng = np.random.default_rng(seed)
    loss, _, _ = global_discrimination_loss(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, (3, J)))
    assert loss > 0


def test_empty_positive_rejected():
    with pytest.raises(InputError):
        global_discrimination_loss([], [])


def test_gate_closed_weight_is_one():
    assert local_weight(0.5, 0.6) == 1.0
    assert local_weight(-0.3, -0.3, LocalWeightState(rho=3.7)) == 1.0


def test_exact_cancellation():
    assert gate(0.0, -0.5, 0.05) == 1
    assert local_weight(0.0, -0.5, LocalWeightState(rho=1.0)) == 0.0


def test_direct_formula_point():
    # the gate cannot open at d_t = -1 (it would need d_prev < -1), so the
    # weight formula is evaluated with the gate forced open
    assert gated_weight(-1.0, 1, 2.0) == 0.25


@settings(max_examples=100)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 4))
def test_weight_monotone_when_gated(a, b, rho):
    lo, hi = min(a, b), max(a, b)
    assert gated_weight(lo, 1, rho) >= gated_weight(hi, 1, rho)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_weight_in_unit_interval(d_t, d_prev):
    assert 0.0 <= local_weight(d_t, d_prev) <= 1.0


def test_state_records_history():
    state = LocalWeightState(rho=1.0)
    assert state.step(("c", 0), -0.5) == 1.0
    assert state.step(("c", 0), 0.0) == 0.0
    assert state.previous[("c", 0)] == 0.0
    with pytest.raises(InputError):
        LocalWeightState(rho=-1)


def test_pixel_loss_examples():
    P = np.array([1.0, -2.0, 0.5])
    f = np.tile(P, (5, 1))
    assert local_pixel_loss(f, P, np.ones(5))[0] == pytest.approx(-5.0, rel=1e-14)
    loss, grad = local_pixel_loss(f, P, np.zeros(5))
    assert loss == 0.0 and not np.any(grad)


def test_pixel_loss_gradient_fd():
    rng = np.random.default_rng(4)
    f = rng.normal(size=(6, 5))
    P = rng.normal(size=5)
    lam = rng.uniform(0, 1, 6)
    _, grad = local_pixel_loss(f, P, lam)
    assert_grad_close(grad, central_diff(lambda v: local_pixel_loss(v, P, lam)[0], f))


def test_pixel_loss_rejects_bad_input():
    with pytest.raises(InputError):
        local_pixel_loss(np.zeros((2, 3)), np.ones(3), np.ones(2))
    with pytest.raises(InputError):
        local_pixel_loss(np.ones((2, 3)), np.ones(3), np.array([0.5, 1.5]))
