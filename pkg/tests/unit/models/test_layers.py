"""Gradient checks for the differentiable building blocks."""

import numpy as np
import pytest

from src.models.acuity.layers import (
    dropout_backward,
    dropout_forward,
    gelu_backward,
    gelu_forward,
    layer_norm_backward,
    layer_norm_forward,
    linear_backward,
    linear_forward,
    masked_softmax,
    softmax_backward,
)

EPS = 1e-6


def numeric_grad(fn, array, upstream):
    """Central differences of ``sum(fn() * upstream)`` with respect to ``array``."""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + EPS
        plus = float(np.sum(fn() * upstream))
        array[index] = original - EPS
        minus = float(np.sum(fn() * upstream))
        array[index] = original
        grad[index] = (plus - minus) / (2 * EPS)
    return grad


@pytest.fixture
def rng():
    return np.random.default_rng(3)


@pytest.mark.unit
def test_linear_backward(rng):
    x, W, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5)), rng.normal(size=5)
    upstream = rng.normal(size=(2, 3, 5))
    grad_x, grad_W, grad_b = linear_backward(x, W, upstream)
    np.testing.assert_allclose(grad_x, numeric_grad(lambda: linear_forward(x, W, b), x, upstream), atol=1e-6)
    np.testing.assert_allclose(grad_W, numeric_grad(lambda: linear_forward(x, W, b), W, upstream), atol=1e-6)
    np.testing.assert_allclose(grad_b, numeric_grad(lambda: linear_forward(x, W, b), b, upstream), atol=1e-6)


@pytest.mark.unit
def test_layer_norm_forward_statistics(rng):
    out, _ = layer_norm_forward(rng.normal(3.0, 5.0, size=(4, 8)), np.ones(8), np.zeros(8))
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=-1), 1.0, atol=1e-3)


@pytest.mark.unit
def test_layer_norm_backward(rng):
    x, gain, bias = rng.normal(size=(3, 6)), rng.normal(size=6), rng.normal(size=6)
    upstream = rng.normal(size=(3, 6))
    _, cache = layer_norm_forward(x, gain, bias)
    grad_x, grad_gain, grad_bias = layer_norm_backward(upstream, cache)

    def forward():
        return layer_norm_forward(x, gain, bias)[0]

    np.testing.assert_allclose(grad_x, numeric_grad(forward, x, upstream), atol=1e-6)
    np.testing.assert_allclose(grad_gain, numeric_grad(forward, gain, upstream), atol=1e-6)
    np.testing.assert_allclose(grad_bias, numeric_grad(forward, bias, upstream), atol=1e-6)


@pytest.mark.unit
def test_gelu(rng):
    assert gelu_forward(np.array([0.0]))[0] == 0.0
    x = rng.normal(size=7)
    upstream = rng.normal(size=7)
    np.testing.assert_allclose(
        gelu_backward(x, upstream), numeric_grad(lambda: gelu_forward(x), x, upstream), atol=1e-6
    )


@pytest.mark.unit
def test_masked_softmax_zeroes_disallowed():
    scores = np.array([[1.0, 2.0, 3.0], [5.0, -1.0, 0.0]])
    allowed = np.array([[True, False, True], [False, False, True]])
    weights = masked_softmax(scores, allowed)
    assert weights[0, 1] == 0.0
    assert weights[1].tolist() == [0.0, 0.0, 1.0]
    np.testing.assert_allclose(weights.sum(axis=-1), 1.0)


@pytest.mark.unit
def test_softmax_backward(rng):
    scores = rng.normal(size=(2, 4))
    allowed = np.ones((2, 4), dtype=bool)
    upstream = rng.normal(size=(2, 4))
    probs = masked_softmax(scores, allowed)
    np.testing.assert_allclose(
        softmax_backward(probs, upstream),
        numeric_grad(lambda: masked_softmax(scores, allowed), scores, upstream),
        atol=1e-6,
    )


@pytest.mark.unit
def test_dropout_identity_without_rng(rng):
    x = rng.normal(size=(3, 3))
    out, keep = dropout_forward(x, 0.5, None)
    assert out is x and keep is None
    assert dropout_backward(x, None) is x


@pytest.mark.unit
def test_dropout_scales_kept_units(rng):
    x = np.ones((200, 50))
    out, keep = dropout_forward(x, 0.2, np.random.default_rng(0))
    assert set(np.unique(out)) <= {0.0, 1.25}
    assert out.mean() == pytest.approx(1.0, abs=0.05)
    np.testing.assert_array_equal(dropout_backward(x, keep), out)
