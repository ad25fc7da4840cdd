"""Tests for encounters, vocabularies and shift records."""

import numpy as np
import pandas as pd
import pytest

from src.core.exceptions import InputValidationError
from src.models.domain.acuity import AcuityLabel
from src.models.domain.encounter import (
    EncodedWindow,
    FeatureVocabulary,
    ObservationTriplet,
    RawEncounter,
    VariableKind,
    VariableSpec,
    VocabularyEntry,
    canonical_name,
    canonical_unit,
)
from tests.factories import ShiftRecordFactory


def _vocabulary():
    return FeatureVocabulary(
        entries=(
            VocabularyEntry("heart_rate", 0, VariableKind.VITAL, True),
            VocabularyEntry("rass", 1, VariableKind.SCORE, True),
            VocabularyEntry("rare_lab", 2, VariableKind.LAB, False),
        )
    )


@pytest.mark.unit
@pytest.mark.parametrize(
    "raw, expected",
    [("Heart Rate", "heart_rate"), ("  SpO2 ", "spo2"), ("norepi-dose/kg", "norepi_dose_kg"), ("a__b.", "a_b")],
)
def test_canonical_name(raw, expected):
    assert canonical_name(raw) == expected


@pytest.mark.unit
def test_canonical_unit():
    assert canonical_unit(" mg/dL ") == "mg/dl"
    assert canonical_unit(None) == ""
    assert canonical_unit(float("nan")) == ""


@pytest.mark.unit
def test_variable_spec_round_trip():
    spec = VariableSpec("lactate", VariableKind.LAB, "mmol/l")
    assert VariableSpec.from_dict(spec.to_dict()) == spec
    assert VariableSpec.from_dict({"name": "Heart Rate", "kind": "Vital", "unit": "BPM"}) == VariableSpec(
        "heart_rate", VariableKind.VITAL, "bpm"
    )
    assert VariableKind.SCORE.always_retained and not VariableKind.LAB.always_retained


@pytest.mark.unit
def test_vocabulary_lookups():
    vocabulary = _vocabulary()
    assert vocabulary.size == 2
    assert vocabulary.retained_names == ["heart_rate", "rass"]
    assert vocabulary.code_of("rass") == 1
    assert vocabulary.code_of("rare_lab") is None
    assert vocabulary.code_of("unknown") is None
    assert vocabulary.kind_of("rare_lab") is VariableKind.LAB
    with pytest.raises(KeyError):
        vocabulary.kind_of("unknown")
    assert FeatureVocabulary.from_list(vocabulary.to_list()) == vocabulary
    assert FeatureVocabulary.from_list(vocabulary.to_list()).hash == vocabulary.hash


@pytest.mark.unit
def test_vocabulary_hash_tracks_retention():
    entries = _vocabulary().entries
    assert FeatureVocabulary(tuple(reversed(entries))).hash == _vocabulary().hash
    kept = FeatureVocabulary(entries[:2] + (VocabularyEntry("rare_lab", 2, VariableKind.LAB, True),))
    assert kept.size == 3
    assert kept.hash != _vocabulary().hash


@pytest.mark.unit
def test_vocabulary_rejects_bad_codes():
    with pytest.raises(InputValidationError):
        FeatureVocabulary((VocabularyEntry("a", 1, VariableKind.VITAL, True),))
    with pytest.raises(InputValidationError):
        FeatureVocabulary(
            (
                VocabularyEntry("a", 0, VariableKind.LAB, False),
                VocabularyEntry("b", 1, VariableKind.VITAL, True),
            )
        )


@pytest.mark.unit
def test_raw_encounter():
    admit = pd.Timestamp("2021-03-01 10:00")
    encounter = RawEncounter("P1", "E1", admit, admit + pd.Timedelta(hours=30))
    assert encounter.los_minutes == 1800.0
    times = pd.Series([admit + pd.Timedelta(minutes=15), admit - pd.Timedelta(hours=1)])
    np.testing.assert_array_equal(encounter.minutes_since_admit(times), [15.0, -60.0])
    with pytest.raises(InputValidationError):
        RawEncounter("P1", "E1", admit, admit)


@pytest.mark.unit
def test_shift_record_validation():
    record = ShiftRecordFactory(patient_id="P9", shift_index=3)
    assert record.key == ("P9", "P9-1", 3)
    assert len(record) == 4
    with pytest.raises(InputValidationError):
        ShiftRecordFactory(label=AcuityLabel.EXCLUDED)
    with pytest.raises(InputValidationError):
        ShiftRecordFactory(size=1, window_minutes=np.array([0.0]))
    with pytest.raises(InputValidationError):
        ShiftRecordFactory(size=1, window_minutes=np.array([720.5]))
    assert len(ShiftRecordFactory(size=1, window_minutes=np.array([720.0]))) == 1


@pytest.mark.unit
def test_encoded_window():
    window = EncodedWindow(t=np.array([0.1, 0.5, 0.9]), f=np.array([2, 0, 1]), v=np.array([1.0, -1.0, 0.0]))
    assert len(window[1:]) == 2
    triplets = window.triplets()
    assert triplets[0] == ObservationTriplet(0.1, 2, 1.0)
    rebuilt = EncodedWindow.from_triplets(triplets)
    np.testing.assert_array_equal(rebuilt.f, window.f)
    reversed_window = window.permuted(np.array([2, 1, 0]))
    np.testing.assert_array_equal(reversed_window.v, [0.0, -1.0, 1.0])
