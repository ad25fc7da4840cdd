"""Tests for encounter merging, the shift grid and the extraction filters."""

import pandas as pd
import pytest

from src.core.exceptions import InputValidationError
from src.data_collection.transformers.encounter_transformer import (
    FUNNEL_STAGES,
    SHIFT_COLUMNS,
    filter_shifts,
    merge_encounters,
    shift_grid,
    transform_patient,
)
from src.models.domain.acuity import AcuityLabel
from tests.unit.data_collection.conftest import ADMIT, make_encounter


def _second(gap_hours, first_hours=24):
    admit = ADMIT + pd.Timedelta(hours=first_hours + gap_hours)
    return make_encounter(encounter_id="E2", admit=admit, hours=24, static={"age": "70", "bmi": "31"})


class TestMergeEncounters:
    """Tests for merge_encounters."""

    @pytest.mark.unit
    def test_gap_under_a_day_merges(self):
        first = make_encounter(hours=24, static={"age": "70", "bmi": None})
        merged = merge_encounters([first, _second(20)])
        assert len(merged) == 1
        stay = merged[0]
        assert stay.encounter_id == "E1"
        assert stay.discharge_time == ADMIT + pd.Timedelta(hours=68)
        assert len(stay.events) == len(first.events) + len(_second(20).events)
        assert stay.events["time"].is_monotonic_increasing
        assert stay.static["bmi"] == "31"

    @pytest.mark.unit
    def test_gap_over_a_day_keeps_both(self):
        merged = merge_encounters([make_encounter(hours=24), _second(30)])
        assert [e.encounter_id for e in merged] == ["E1", "E2"]

    @pytest.mark.unit
    def test_single_encounter_unchanged(self):
        encounter = make_encounter()
        assert merge_encounters([encounter]) == [encounter]

    @pytest.mark.unit
    def test_overlap_rejected(self):
        with pytest.raises(InputValidationError):
            merge_encounters([make_encounter(hours=24), _second(-2)])

    @pytest.mark.unit
    def test_mixed_patients_rejected(self):
        other = make_encounter(patient_id="P2", encounter_id="E9", admit=ADMIT + pd.Timedelta(days=10))
        with pytest.raises(InputValidationError):
            merge_encounters([make_encounter(), other])


class TestShiftGrid:
    """Tests for shift_grid."""

    @pytest.mark.unit
    def test_admission_on_anchor(self):
        starts = shift_grid(ADMIT, ADMIT + pd.Timedelta(hours=30))
        assert starts == [ADMIT + pd.Timedelta(hours=h) for h in (0, 12, 24)]

    @pytest.mark.unit
    def test_first_start_precedes_midshift_admission(self):
        admit = pd.Timestamp("2021-03-01 10:30")
        starts = shift_grid(admit, admit + pd.Timedelta(hours=12))
        assert starts[0] == pd.Timestamp("2021-03-01 07:00")
        assert starts[1] == pd.Timestamp("2021-03-01 19:00")
        assert all(start.hour in (7, 19) for start in starts)

    @pytest.mark.unit
    def test_early_morning_admission(self):
        admit = pd.Timestamp("2021-03-01 03:00")
        assert shift_grid(admit, admit + pd.Timedelta(hours=1)) == [pd.Timestamp("2021-02-28 19:00")]


def _shift_rows(rows):
    frame = pd.DataFrame(rows, columns=SHIFT_COLUMNS)
    return frame


class TestFilterShifts:
    """Tests for filter_shifts."""

    @pytest.mark.unit
    def test_short_stay_dropped(self):
        shifts = _shift_rows([("P", "S", 0, 0.0, 600.0, "Normal", False)])
        retained, funnel = filter_shifts(shifts)
        assert retained.empty
        assert funnel["short_stay"] == 1

    @pytest.mark.unit
    def test_early_shift_dropped_and_boundary_kept(self):
        shifts = _shift_rows(
            [
                ("P", "S", 0, 360.0, 3000.0, "Normal", False),
                ("P", "S", 1, 720.0, 3000.0, "Normal", False),
            ]
        )
        retained, funnel = filter_shifts(shifts)
        assert retained["shift_index"].tolist() == [1]
        assert funnel["early_shift"] == 1

    @pytest.mark.unit
    def test_excluded_and_outside_shifts_dropped(self):
        shifts = _shift_rows(
            [
                ("P", "S", 0, -300.0, 3000.0, "Normal", False),
                ("P", "S", 1, 900.0, 3000.0, "Excluded", None),
                ("P", "S", 2, 1620.0, 3000.0, "Coma", None),
            ]
        )
        retained, funnel = filter_shifts(shifts)
        assert retained["label"].tolist() == ["Coma"]
        assert funnel["outside_icu_stay"] == 1
        assert funnel["excluded_label"] == 1

    @pytest.mark.unit
    def test_delirium_task_requires_cam(self):
        shifts = _shift_rows(
            [
                ("P", "S", 1, 720.0, 3000.0, "Coma", None),
                ("P", "S", 2, 1440.0, 3000.0, "Delirium", True),
            ]
        )
        retained, funnel = filter_shifts(shifts, task="delirium")
        assert retained["shift_index"].tolist() == [2]
        assert funnel["missing_cam"] == 1
        assert filter_shifts(shifts)[1]["missing_cam"] == 0

    @pytest.mark.unit
    def test_funnel_adds_up(self):
        shifts = _shift_rows(
            [
                ("P", "S", i, 720.0 * i - 100.0, 4000.0, ["Normal", "Excluded"][i % 2], None)
                for i in range(7)
            ]
        )
        _, funnel = filter_shifts(shifts)
        dropped = sum(funnel[stage] for stage in FUNNEL_STAGES)
        assert dropped + funnel["retained_shifts"] == funnel["raw_shifts"] == 7

    @pytest.mark.unit
    def test_unknown_task(self):
        with pytest.raises(InputValidationError):
            filter_shifts(_shift_rows([]), task="sepsis")


class TestTransformPatient:
    """Tests for transform_patient."""

    @pytest.mark.unit
    def test_records_respect_window_and_filters(self):
        records, labeled, funnel = transform_patient([make_encounter(hours=48)])
        assert [r.shift_index for r in records] == [1, 2, 3]
        assert len(labeled) == 4
        for record in records:
            assert record.shift_start >= 720
            assert record.label is AcuityLabel.NORMAL
            assert record.binary_delirium_label is False
            assert len(record) > 0
            assert record.window_minutes.min() > 0
            assert record.window_minutes.max() <= 720
        assert funnel["retained_shifts"] == 3
        assert funnel["early_shift"] == 1

    @pytest.mark.unit
    def test_window_holds_events_of_previous_twelve_hours(self):
        records, _, _ = transform_patient([make_encounter(hours=48)])
        first = records[0]
        # Heart rate at minutes 30, 90, ..., 690 before the shift starting at 720
        heart = first.window_minutes[first.window_names == "heart_rate"]
        assert heart.tolist() == [float(m) for m in range(30, 720, 60)]
        # RASS recorded exactly at the shift start belongs to the window (right-closed)
        assert 720.0 in first.window_minutes[first.window_names == "rass"].tolist()

    @pytest.mark.unit
    def test_score_at_shift_start_feeds_window_and_label(self):
        rows = [
            (ADMIT, "rass", 0.0, "score"),
            (ADMIT, "cam", 0.0, "result"),
            (ADMIT + pd.Timedelta(minutes=720), "rass", -5.0, "score"),
        ]
        rows += [(ADMIT + pd.Timedelta(minutes=m), "heart_rate", 80.0, "bpm") for m in range(30, 2160, 60)]
        events = pd.DataFrame(rows, columns=["time", "name", "value", "unit"])
        events = events.sort_values(["time", "name"], kind="mergesort").reset_index(drop=True)
        records, _, _ = transform_patient([make_encounter(hours=36, events=events)])

        shift = records[0]
        assert shift.shift_start == 720.0
        # The sedation score sits at the right edge of the input window
        rass = shift.window_values[shift.window_names == "rass"]
        assert shift.window_minutes[shift.window_names == "rass"].tolist() == [720.0]
        assert rass.tolist() == [-5.0]
        # and is still in force (age exactly 720) at the end of the labeled shift
        assert shift.label is AcuityLabel.COMA

    @pytest.mark.unit
    def test_death_ends_the_stay(self):
        death = ADMIT + pd.Timedelta(hours=30)
        records, labeled, _ = transform_patient([make_encounter(hours=30, death=death)])
        assert labeled["label"].tolist()[-1] == "Dead"
        assert records[-1].label is AcuityLabel.DEAD

    @pytest.mark.unit
    def test_no_encounters(self):
        records, labeled, funnel = transform_patient([])
        assert records == [] and labeled.empty
        assert funnel["raw_shifts"] == 0
