"""Tests for shift-level phenotype labeling."""

import itertools
import time

import pandas as pd
import pytest

from src.core.exceptions import InputValidationError
from src.models.domain.acuity import AcuityLabel, CamResult, ScoreKind, ScoreSnapshot, TimedScore
from src.services.phenotype import (
    StayScores,
    carry_forward,
    label_scores_frame,
    label_shift,
    label_stay,
    snapshot_at,
)
from tests.factories import ScoreSnapshotFactory, TimedScoreFactory

RASS_VALUES = list(range(-5, 5)) + [None]
CAM_VALUES = [CamResult.POSITIVE, CamResult.NEGATIVE, None]
GCS_VALUES = list(range(3, 16)) + [None]


def oracle(rass, cam, gcs, died):
    """Decision table written independently of the labeler."""
    if died:
        return "Dead"
    if rass is None and cam is None and gcs is None:
        return "Excluded"
    low_gcs = gcs is not None and gcs <= 8
    if rass is not None:
        if rass <= -4:
            return "Coma"
        if rass == -3:
            return "Coma" if (gcs is None or low_gcs) else "Delirium"
    elif low_gcs:
        return "Coma"
    return {
        CamResult.POSITIVE: "Delirium",
        CamResult.NEGATIVE: "Normal",
    }.get(cam, "Coma" if low_gcs else "Normal")


@pytest.mark.unit
def test_truth_table_matches_oracle():
    """All 924 score combinations agree with the independent decision table."""
    started = time.perf_counter()
    cases = list(itertools.product(RASS_VALUES, CAM_VALUES, GCS_VALUES, [True, False]))
    assert len(cases) == 924
    for rass, cam, gcs, died in cases:
        snapshot = ScoreSnapshot(rass=rass, cam=cam, gcs=gcs, died_in_shift=died)
        assert label_shift(snapshot).value == oracle(rass, cam, gcs, died), (rass, cam, gcs, died)
    assert time.perf_counter() - started < 1.0


@pytest.mark.unit
@pytest.mark.parametrize(
    "snapshot, expected",
    [
        (dict(died_in_shift=True, rass=0, cam=CamResult.NEGATIVE, gcs=15), AcuityLabel.DEAD),
        (dict(rass=-5, cam=None, gcs=3), AcuityLabel.COMA),
        (dict(rass=0, cam=CamResult.NEGATIVE, gcs=15), AcuityLabel.NORMAL),
        (dict(rass=1, cam=CamResult.POSITIVE, gcs=14), AcuityLabel.DELIRIUM),
        (dict(rass=-3, cam=None, gcs=6), AcuityLabel.COMA),
        (dict(rass=-3, cam=None, gcs=12), AcuityLabel.DELIRIUM),
        (dict(rass=None, cam=None, gcs=8), AcuityLabel.COMA),
        (dict(rass=None, cam=None, gcs=None), AcuityLabel.EXCLUDED),
        (dict(rass=-3, cam=CamResult.NEGATIVE, gcs=None), AcuityLabel.COMA),
        (dict(rass=2, cam=None, gcs=7), AcuityLabel.COMA),
        (dict(rass=2, cam=None, gcs=None), AcuityLabel.NORMAL),
    ],
)
def test_label_shift_examples(snapshot, expected):
    """Documented decision examples, including the gap-filling rules."""
    assert label_shift(ScoreSnapshotFactory(**snapshot)) is expected


@pytest.mark.unit
@pytest.mark.parametrize("cam", CAM_VALUES)
@pytest.mark.parametrize("gcs", GCS_VALUES)
def test_deeper_sedation_never_leaves_coma(cam, gcs):
    """Lowering RASS below -3 never turns a Coma label into Normal or Delirium."""
    for high in range(-2, 5):
        for low in (-5, -4):
            before = label_shift(ScoreSnapshot(rass=high, cam=cam, gcs=gcs))
            after = label_shift(ScoreSnapshot(rass=low, cam=cam, gcs=gcs))
            assert after is AcuityLabel.COMA
            if before is AcuityLabel.COMA:
                assert after is AcuityLabel.COMA


@pytest.mark.unit
@pytest.mark.parametrize("rass", [5, -6])
def test_snapshot_rejects_out_of_range_rass(rass):
    with pytest.raises(InputValidationError):
        ScoreSnapshot(rass=rass)


@pytest.mark.unit
@pytest.mark.parametrize("gcs", [2, 16])
def test_snapshot_rejects_out_of_range_gcs(gcs):
    with pytest.raises(InputValidationError):
        ScoreSnapshot(gcs=gcs)


class TestCarryForward:
    """Tests for carry_forward."""

    @pytest.mark.unit
    def test_value_within_horizon(self):
        scores = [TimedScoreFactory(time=0.0, value=-2)]
        assert carry_forward(scores, 660.0) == -2

    @pytest.mark.unit
    def test_value_past_horizon_is_missing(self):
        scores = [TimedScoreFactory(time=0.0, value=-2)]
        assert carry_forward(scores, 780.0) is None

    @pytest.mark.unit
    def test_horizon_is_inclusive(self):
        scores = [TimedScoreFactory(time=100.0, value=1)]
        assert carry_forward(scores, 820.0) == 1
        assert carry_forward(scores, 820.5) is None

    @pytest.mark.unit
    def test_empty_stream(self):
        assert carry_forward([], 300.0) is None

    @pytest.mark.unit
    def test_latest_score_wins(self):
        scores = [TimedScoreFactory(time=10.0, value=-1), TimedScoreFactory(time=20.0, value=2)]
        assert carry_forward(scores, 20.0) == 2
        assert carry_forward(scores, 15.0) == -1

    @pytest.mark.unit
    def test_future_scores_are_ignored(self):
        scores = [TimedScoreFactory(time=500.0, value=3)]
        assert carry_forward(scores, 499.0) is None

    @pytest.mark.unit
    def test_unsorted_stream_rejected(self):
        scores = [TimedScoreFactory(time=20.0), TimedScoreFactory(time=10.0)]
        with pytest.raises(InputValidationError):
            carry_forward(scores, 30.0)

    @pytest.mark.unit
    def test_idempotent(self):
        scores = [TimedScoreFactory(time=t, value=v) for t, v in [(0.0, 0), (300.0, -4)]]
        assert carry_forward(scores, 400.0) == carry_forward(scores, 400.0)


def _scores(*triples):
    return [TimedScore(time=t, kind=ScoreKind.parse(k), value=v) for t, k, v in triples]


class TestLabelStay:
    """Tests for label_stay and snapshot_at."""

    @pytest.mark.unit
    def test_carry_forward_labels_second_shift(self):
        """Scores only in the first shift still label the next one if recent enough."""
        stay = StayScores.from_scores(
            "S1",
            [0.0, 720.0],
            _scores((720.0, "rass", 0), (720.0, "cam", CamResult.NEGATIVE)),
        )
        assert label_stay(stay) == [(0, AcuityLabel.NORMAL), (1, AcuityLabel.NORMAL)]

    @pytest.mark.unit
    def test_stale_scores_exclude_later_shift(self):
        stay = StayScores.from_scores(
            "S1", [0.0, 720.0, 1440.0], _scores((100.0, "rass", 1), (100.0, "cam", CamResult.POSITIVE))
        )
        labels = [label for _, label in label_stay(stay)]
        assert labels == [AcuityLabel.DELIRIUM, AcuityLabel.EXCLUDED, AcuityLabel.EXCLUDED]

    @pytest.mark.unit
    def test_zero_shifts(self):
        assert label_stay(StayScores.from_scores("S1", [], [])) == []

    @pytest.mark.unit
    def test_matches_per_shift_labeling(self):
        """A three-shift stay agrees with labeling each end-of-shift snapshot directly."""
        scores = _scores(
            (100.0, "rass", -4),
            (700.0, "gcs", 5),
            (900.0, "rass", 0),
            (900.0, "cam", CamResult.POSITIVE),
            (1500.0, "cam", CamResult.NEGATIVE),
            (1600.0, "gcs", 15),
        )
        stay = StayScores.from_scores("S1", [0.0, 720.0, 1440.0], scores)
        expected = [label_shift(snapshot_at(stay, start)) for start in stay.shift_starts]
        assert [label for _, label in label_stay(stay)] == expected
        assert expected == [AcuityLabel.COMA, AcuityLabel.DELIRIUM, AcuityLabel.NORMAL]

    @pytest.mark.unit
    def test_nothing_after_dead_shift(self):
        stay = StayScores.from_scores(
            "S1", [0.0, 720.0, 1440.0], _scores((60.0, "rass", 0)), death_time=1000.0
        )
        assert label_stay(stay) == [(0, AcuityLabel.NORMAL), (1, AcuityLabel.DEAD)]

    @pytest.mark.unit
    def test_death_at_shift_end_belongs_to_that_shift(self):
        stay = StayScores.from_scores("S1", [0.0, 720.0], _scores((60.0, "rass", 0)), death_time=720.0)
        assert label_stay(stay) == [(0, AcuityLabel.DEAD)]

    @pytest.mark.unit
    def test_overlapping_shifts_rejected(self):
        stay = StayScores.from_scores("S1", [0.0, 600.0], [])
        with pytest.raises(InputValidationError):
            label_stay(stay)


@pytest.mark.unit
def test_label_scores_frame():
    """Long-form scores are labeled on an admission-anchored grid."""
    scores = pd.DataFrame(
        {
            "patient_id": ["P1"] * 4 + ["P2"],
            "stay_id": ["A"] * 4 + ["B"],
            "time_min": [10, 10, 800, 800, 30],
            "kind": ["rass", "cam", "rass", "gcs", "gcs"],
            "value": ["0", "Negative", "-3", "12", "6"],
        }
    )
    labels = label_scores_frame(scores)
    assert list(labels.columns) == ["stay_id", "shift_index", "label"]
    assert labels.to_dict("records") == [
        {"stay_id": "A", "shift_index": 0, "label": "Normal"},
        {"stay_id": "A", "shift_index": 1, "label": "Delirium"},
        {"stay_id": "B", "shift_index": 0, "label": "Coma"},
    ]


@pytest.mark.unit
def test_label_scores_frame_requires_columns():
    with pytest.raises(InputValidationError):
        label_scores_frame(pd.DataFrame({"stay_id": ["A"]}))
