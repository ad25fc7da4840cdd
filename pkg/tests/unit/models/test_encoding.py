"""Tests for continuous value embeddings and batching."""

import numpy as np
import pytest

from src.core.exceptions import InputValidationError
from src.models.acuity.encoding import (
    CveParams,
    add_order_positions,
    batch_shifts,
    cve_backward,
    cve_forward,
    cve_hidden,
    cve_hidden_size,
    embed_window,
    pad_windows,
    sinusoidal_positions,
)
from src.models.domain.encounter import EncodedWindow


@pytest.fixture
def cve():
    return CveParams.init(np.random.default_rng(0), 16)


@pytest.mark.unit
def test_hidden_size_is_ceil_sqrt():
    assert [cve_hidden_size(d) for d in (1, 16, 17, 32)] == [1, 4, 5, 6]


@pytest.mark.unit
def test_cve_shapes(cve):
    assert cve_forward(0.5, cve).shape == (16,)
    assert cve_forward(np.zeros((3, 5)), cve).shape == (3, 5, 16)


@pytest.mark.unit
def test_cve_matches_formula(cve):
    x = 0.3
    expected = np.tanh(x * cve.W1[0] + cve.b1) @ cve.W2 + cve.b2
    np.testing.assert_allclose(cve_forward(x, cve), expected)


@pytest.mark.unit
def test_zero_weights_give_bias(cve):
    zero = CveParams.zeros(16)
    zero.b2[:] = 0.25
    np.testing.assert_array_equal(cve_forward(np.array([1.0, -7.0]), zero), np.full((2, 16), 0.25))


@pytest.mark.unit
@pytest.mark.parametrize("value", [np.nan, np.inf, -np.inf])
def test_cve_rejects_non_finite(cve, value):
    with pytest.raises(InputValidationError):
        cve_forward(np.array([0.0, value]), cve)


@pytest.mark.unit
def test_cve_backward_matches_finite_differences(cve):
    x = np.array([[0.1, -0.4, 0.9]])
    upstream = np.random.default_rng(1).normal(size=(1, 3, 16))
    grads = cve_backward(x, cve_hidden(x, cve), upstream, cve)
    eps = 1e-6
    for name in CveParams.NAMES:
        param = getattr(cve, name)
        index = tuple(0 for _ in param.shape)
        original = param[index]
        param[index] = original + eps
        plus = float(np.sum(cve_forward(x, cve) * upstream))
        param[index] = original - eps
        minus = float(np.sum(cve_forward(x, cve) * upstream))
        param[index] = original
        assert grads[name][index] == pytest.approx((plus - minus) / (2 * eps), rel=1e-5, abs=1e-8)


@pytest.mark.unit
def test_params_round_trip(cve):
    restored = CveParams.from_params(cve.to_params("cve_t"), "cve_t")
    for name in CveParams.NAMES:
        assert getattr(restored, name) is getattr(cve, name)


@pytest.mark.unit
def test_embed_window_sums_parts(cve):
    table = np.arange(3 * 16, dtype=np.float64).reshape(3, 16)
    window = EncodedWindow(t=np.array([0.2, 0.5]), f=np.array([2, 0]), v=np.array([1.0, -1.0]))
    embedded = embed_window(window, cve, cve, table)
    expected = cve_forward(window.t, cve) + cve_forward(window.v, cve) + table[[2, 0]]
    np.testing.assert_allclose(embedded, expected)


@pytest.mark.unit
def test_embed_empty_window(cve):
    empty = EncodedWindow(t=np.zeros(0), f=np.zeros(0, dtype=np.int64), v=np.zeros(0))
    assert embed_window(empty, cve, cve, np.zeros((3, 16))).shape == (0, 16)


@pytest.mark.unit
def test_embed_rejects_unknown_code(cve):
    window = EncodedWindow(t=np.array([0.2]), f=np.array([3]), v=np.array([1.0]))
    with pytest.raises(InputValidationError):
        embed_window(window, cve, cve, np.zeros((3, 16)))


@pytest.mark.unit
def test_sinusoidal_positions():
    table = sinusoidal_positions(5, 6)
    assert table.shape == (5, 6)
    np.testing.assert_allclose(table[0], [0.0, 1.0] * 3)
    assert table[3, 0] == pytest.approx(np.sin(3.0))


@pytest.mark.unit
def test_order_positions_limit():
    table = sinusoidal_positions(2, 4)
    assert add_order_positions(np.zeros((2, 4)), table).shape == (2, 4)
    with pytest.raises(InputValidationError):
        add_order_positions(np.zeros((3, 4)), table)


@pytest.mark.unit
def test_pad_windows_marks_placeholders():
    windows = [
        EncodedWindow(t=np.array([0.1, 0.2, 0.3]), f=np.array([0, 1, 0]), v=np.ones(3)),
        EncodedWindow(t=np.zeros(0), f=np.zeros(0, dtype=np.int64), v=np.zeros(0)),
    ]
    batch = pad_windows(windows, np.zeros((2, 1)))
    assert batch.length == 3 and len(batch) == 2
    assert batch.valid.tolist() == [[True, True, True], [True, False, False]]
    assert batch.placeholder.tolist() == [False, True]
    assert batch.observed.tolist() == [[True, True, True], [False, False, False]]


@pytest.mark.unit
def test_batch_shifts_stacks_static(shifts):
    batch = batch_shifts(shifts, 3)
    assert batch.static.shape == (len(shifts), 3)
    assert batch_shifts([], 3).static.shape == (0, 3)
