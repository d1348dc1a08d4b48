import math

import numpy as np
import pytest

from anticipate.nn.adam import AdamState, adam_step


def test_zero_gradient_leaves_params_unchanged():
    params = {"w": np.array([1.0, -2.0, 3.0])}
    state = AdamState.for_params(params)
    before = params["w"].copy()
    adam_step(params, {"w": np.zeros(3)}, state)
    np.testing.assert_array_equal(params["w"], before)


def test_first_step_is_signed_learning_rate():
    # bias correction makes the first update -lr * g / (|g| + eps)
    for g in (0.3, -0.007, 4.0):
        params = {"w": np.array([1.0])}
        state = AdamState.for_params(params, learning_rate=0.001)
        adam_step(params, {"w": np.array([g])}, state)
        expected = 1.0 - 0.001 * math.copysign(1.0, g) * abs(g) / (abs(g) + 1e-8)
        np.testing.assert_allclose(params["w"], [expected], rtol=1e-12)
        assert abs(params["w"][0] - (1.0 - 0.001 * math.copysign(1.0, g))) < 1e-8


def manual_adam_trace(w0, steps, lr=0.001, b1=0.9, b2=0.999, eps=1e-8):
    """Hand-rolled Adam on f(w) = w^2 (gradient 2w), scalar arithmetic."""
    w = w0
    m = v = 0.0
    trace = []
    for t in range(1, steps + 1):
        g = 2.0 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        w = w - lr * m_hat / (math.sqrt(v_hat) + eps)
        trace.append(w)
    return trace


def test_two_steps_match_manual_trace():
    params = {"w": np.array([1.0])}
    state = AdamState.for_params(params, learning_rate=0.001)
    observed = []
    for _ in range(2):
        grads = {"w": 2.0 * params["w"]}
        adam_step(params, grads, state)
        observed.append(float(params["w"][0]))
    np.testing.assert_allclose(observed, manual_adam_trace(1.0, 2), rtol=1e-14)
    assert state.step_count == 2


def test_longer_run_matches_manual_trace():
    params = {"w": np.array([1.0])}
    state = AdamState.for_params(params, learning_rate=0.01)
    for _ in range(25):
        adam_step(params, {"w": 2.0 * params["w"]}, state)
    expected = manual_adam_trace(1.0, 25, lr=0.01)[-1]
    np.testing.assert_allclose(params["w"], [expected], rtol=1e-12)


def test_name_mismatch_rejected():
    params = {"w": np.zeros(2)}
    state = AdamState.for_params(params)
    with pytest.raises(ValueError):
        adam_step(params, {"b": np.zeros(2)}, state)
    with pytest.raises(ValueError):
        adam_step(params, {"w": np.zeros(3)}, state)
