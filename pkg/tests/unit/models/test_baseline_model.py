"""Tests for the logistic regression baseline."""

import numpy as np
import pytest

from src.core.exceptions import InputValidationError
from src.models.acuity.baseline_model import LogisticBaselineModel


@pytest.fixture
def separable():
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1, 2], 40)
    X = rng.normal(scale=0.3, size=(120, 2)) + np.eye(3)[y][:, :2] * 3.0
    return X, y


@pytest.mark.unit
def test_four_class_layout_fills_absent_classes(separable):
    X, y = separable
    model = LogisticBaselineModel(class_count=4, seed=0)
    metrics = model.train(X, y, ["a", "b"])
    probs = model.predict_proba(X)
    assert probs.shape == (120, 4)
    assert np.all(probs[:, 3] == 0.0)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    assert metrics["accuracy"] > 0.9


@pytest.mark.unit
def test_binary_head_returns_positive_column(separable):
    X, y = separable
    binary = (y == 1).astype(int)
    model = LogisticBaselineModel(class_count=1, seed=0)
    model.train(X, binary)
    probs = model.predict_proba(X)
    assert probs.shape == (120, 1)
    assert probs[binary == 1, 0].mean() > probs[binary == 0, 0].mean()


@pytest.mark.unit
def test_single_class_rejected():
    with pytest.raises(InputValidationError):
        LogisticBaselineModel().train(np.zeros((3, 2)), np.zeros(3))


@pytest.mark.unit
def test_empty_prediction(separable):
    X, y = separable
    model = LogisticBaselineModel(class_count=4)
    model.train(X, y)
    assert model.predict_proba(np.zeros((0, 2))).shape == (0, 4)


@pytest.mark.unit
def test_feature_importance_sorted(separable):
    X, y = separable
    model = LogisticBaselineModel()
    model.train(X, y, ["a", "b"])
    importance = model.get_feature_importance()
    assert set(importance["feature"]) == {"a", "b"}
    assert importance["importance"].is_monotonic_decreasing
