"""In-memory bundles and scripted estimators for the evaluation tests."""

from pathlib import Path

import numpy as np
import pytest

from src.data_collection.pipeline import LoadedBundle, split_dataset
from src.data_collection.preprocessor import ShiftPreprocessor
from src.models.domain.acuity import CLASS_ORDER, AcuityLabel
from src.models.domain.encounter import VariableKind, VariableSpec
from src.services.evaluation.cross_validation import FoldPredictions
from tests.factories import ShiftRecordFactory

CATALOG = [
    VariableSpec("heart_rate", VariableKind.VITAL, "bpm"),
    VariableSpec("sbp", VariableKind.VITAL, "mmhg"),
]


def signal_records(patients=30, classes=CLASS_ORDER, seed=0):
    """Every patient has one shift per class; heart rate rises and pressure falls with acuity."""
    rng = np.random.default_rng(seed)
    records = []
    for p in range(patients):
        for index, label in enumerate(classes):
            level = label.class_index
            records.append(
                ShiftRecordFactory(
                    patient_id=f"P{p:03d}",
                    stay_id=f"P{p:03d}-1",
                    shift_index=index + 1,
                    label=label,
                    window_names=np.array(["heart_rate", "sbp"] * 2, dtype=object),
                    window_values=np.array(
                        [80 + 20 * level, 120 - 15 * level] * 2, dtype=np.float64
                    ) + rng.normal(scale=3.0, size=4),
                    static={"age": str(int(rng.integers(30, 90))), "sex": "FM"[p % 2]},
                    binary_delirium_label=label is AcuityLabel.DELIRIUM,
                )
            )
    return records


def make_bundle(records, fold_count=5, test_fraction=0.3, seed=0, task="brain_acuity"):
    split = split_dataset(records, seed, fold_count, test_fraction)
    preprocessor = ShiftPreprocessor(CATALOG).fit(split.train)
    return LoadedBundle(
        directory=Path("."),
        split=split,
        catalog=CATALOG,
        task=task,
        seed=seed,
        vocabulary_hash=preprocessor.vocabulary.hash,
        preprocessor_state=preprocessor.to_state(),
        manifest={},
    )


class OracleEstimator:
    """Puts 0.85 on the true class of every shift."""

    name = "oracle"

    def __init__(self, class_count=4):
        self.class_count = class_count

    def _scores(self, records):
        if self.class_count == 1:
            return np.array([[0.9 if r.binary_delirium_label else 0.1] for r in records])
        probs = np.full((len(records), 4), 0.05)
        probs[np.arange(len(records)), [r.label.class_index for r in records]] = 0.85
        return probs

    def fit_predict(self, bundle, fold, train, validation, test):
        return FoldPredictions(self._scores(validation), self._scores(test), {"fold_seen": fold})


class ConstantEstimator(OracleEstimator):
    """Uniform probabilities, i.e. no discrimination at all."""

    name = "constant"

    def _scores(self, records):
        return np.full((len(records), self.class_count), 1.0 / max(self.class_count, 2))


@pytest.fixture
def bundle():
    return make_bundle(signal_records())
