"""Tests for scores, labels and prediction outputs."""

import pytest

from src.core.exceptions import InputValidationError
from src.models.domain.acuity import (
    CLASS_NAMES,
    CLASS_ORDER,
    AcuityLabel,
    CamResult,
    PredictionOutput,
    ScoreKind,
    ScoreSnapshot,
    TimedScore,
)


@pytest.mark.unit
@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Positive", CamResult.POSITIVE),
        (" pos ", CamResult.POSITIVE),
        (1, CamResult.POSITIVE),
        ("0.0", CamResult.NEGATIVE),
        ("NEGATIVE", CamResult.NEGATIVE),
        (CamResult.NEGATIVE, CamResult.NEGATIVE),
    ],
)
def test_cam_parse(raw, expected):
    assert CamResult.parse(raw) is expected


@pytest.mark.unit
def test_cam_parse_rejects_unknown():
    with pytest.raises(InputValidationError):
        CamResult.parse("unable to assess")


@pytest.mark.unit
def test_class_order():
    assert CLASS_NAMES == ["Normal", "Delirium", "Coma", "Dead"]
    assert [label.class_index for label in CLASS_ORDER] == [0, 1, 2, 3]
    assert AcuityLabel.from_index(2) is AcuityLabel.COMA
    with pytest.raises(InputValidationError):
        AcuityLabel.EXCLUDED.class_index


@pytest.mark.unit
def test_label_parse():
    assert AcuityLabel.parse(" coma") is AcuityLabel.COMA
    assert AcuityLabel.parse("Excluded") is AcuityLabel.EXCLUDED
    with pytest.raises(InputValidationError):
        AcuityLabel.parse("Stupor")


@pytest.mark.unit
def test_timed_score_parse():
    assert TimedScore.parse(30, "RASS", "-3") == TimedScore(30.0, ScoreKind.RASS, -3)
    assert TimedScore.parse(5, "gcs", "8.0").value == 8
    assert TimedScore.parse(5, "cam", "Positive").value is CamResult.POSITIVE


@pytest.mark.unit
@pytest.mark.parametrize(
    "kind, value",
    [("rass", "5"), ("rass", "-6"), ("rass", "1.5"), ("gcs", "2"), ("gcs", "16"), ("gcs", "x"), ("pain", "3")],
)
def test_timed_score_rejects(kind, value):
    with pytest.raises(InputValidationError):
        TimedScore.parse(0, kind, value)


@pytest.mark.unit
def test_timed_score_rejects_negative_time():
    with pytest.raises(InputValidationError):
        TimedScore(-1.0, ScoreKind.RASS, 0)
    with pytest.raises(InputValidationError):
        TimedScore(0.0, ScoreKind.CAM, 1)


@pytest.mark.unit
def test_snapshot():
    assert ScoreSnapshot().all_missing
    assert not ScoreSnapshot(gcs=3).all_missing
    with pytest.raises(InputValidationError):
        ScoreSnapshot(rass=7)
    with pytest.raises(InputValidationError):
        ScoreSnapshot(cam="Positive")


@pytest.mark.unit
def test_prediction_output():
    four = PredictionOutput.from_probabilities([0.1, 0.4, 0.4, 0.1])
    assert four.predicted_class == 1
    assert four.label is AcuityLabel.DELIRIUM

    binary = PredictionOutput.from_probabilities([0.51])
    assert binary.predicted_class == 1
    assert binary.label is None
    assert PredictionOutput.from_probabilities([0.5]).predicted_class == 0
