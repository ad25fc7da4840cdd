"""
Logistic Regression Baseline

Multinomial (or binary) logistic regression over the per-shift tabular
matrix: window means of each retained variable plus the static vector.
"""

from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import accuracy_score, balanced_accuracy_score, log_loss

from src.core.exceptions import InputValidationError


class LogisticBaselineModel:
    """Tabular baseline sharing the transformer's output layout."""

    def __init__(
        self,
        class_count: int = 4,
        class_weighting: bool = True,
        seed: int = 42,
        max_iter: int = 2000,
    ):
        """Initialize the model.

        Args:
            class_count: 4 for the four-class head, 1 for the binary delirium head.
            class_weighting: Reweight classes by inverse frequency.
            seed: Random state handed to the solver.
            max_iter: Solver iteration limit.
        """
        self.class_count = class_count
        self.model = LogisticRegression(
            class_weight="balanced" if class_weighting else None,
            max_iter=max_iter,
            random_state=seed,
        )
        self.feature_names: Optional[List[str]] = None

    @property
    def labels(self) -> List[int]:
        return [0, 1] if self.class_count == 1 else list(range(self.class_count))

    def train(
        self, X_train: np.ndarray, y_train: np.ndarray, feature_names: Optional[List[str]] = None
    ) -> Dict[str, float]:
        """Fit on a tabular matrix and report training metrics.

        Raises:
            InputValidationError: If the training set has a single class.
        """
        y_train = np.asarray(y_train, dtype=np.int64)
        if len(np.unique(y_train)) < 2:
            raise InputValidationError("Logistic baseline needs at least two classes to train")
        self.feature_names = feature_names or [f"x{i}" for i in range(X_train.shape[1])]
        self.model.fit(X_train, y_train)
        return self.evaluate(X_train, y_train)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """``n x 4`` class probabilities (absent training classes get 0), or ``n x 1``."""
        if len(X) == 0:
            return np.zeros((0, self.class_count))
        raw = self.model.predict_proba(X)
        if self.class_count == 1:
            positive = list(self.model.classes_).index(1)
            return raw[:, [positive]]
        probs = np.zeros((len(X), self.class_count))
        for column, label in enumerate(self.model.classes_):
            probs[:, int(label)] = raw[:, column]
        return probs

    def evaluate(self, X: np.ndarray, y: np.ndarray) -> Dict[str, float]:
        """Accuracy, balanced accuracy and log loss on a labeled matrix."""
        probs = self.predict_proba(X)
        if self.class_count == 1:
            full = np.hstack([1.0 - probs, probs])
        else:
            full = probs
        predicted = full.argmax(axis=1)
        return {
            "accuracy": float(accuracy_score(y, predicted)),
            "balanced_accuracy": float(balanced_accuracy_score(y, predicted)),
            "log_loss": float(log_loss(y, np.clip(full, 1e-15, 1.0), labels=self.labels)),
        }

    def get_feature_importance(self) -> pd.DataFrame:
        """Mean absolute coefficient per feature, largest first."""
        importance = np.abs(self.model.coef_).mean(axis=0)
        return pd.DataFrame(
            {"feature": self.feature_names, "importance": importance}
        ).sort_values("importance", ascending=False, kind="mergesort")
