"""Turn raw encounters into labeled, filtered shift records."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.core.config import (
    ENCOUNTER_MERGE_GAP_MINUTES,
    SHIFT_ANCHOR_HOUR,
    SHIFT_MINUTES,
)
from src.core.exceptions import InputValidationError
from src.core.logger import get_logger
from src.models.domain.acuity import AcuityLabel, CamResult, ScoreKind, TimedScore
from src.models.domain.encounter import RawEncounter, ShiftRecord
from src.services.phenotype.labeler import StayScores, label_stay, snapshot_at

logger = get_logger(__name__)

TASK_BRAIN_ACUITY = "brain_acuity"
TASK_DELIRIUM = "delirium"
TASKS = (TASK_BRAIN_ACUITY, TASK_DELIRIUM)

SHIFT_COLUMNS = [
    "patient_id",
    "stay_id",
    "shift_index",
    "shift_start_min",
    "los_min",
    "label",
    "binary_delirium_label",
]

# Funnel stages in the order the filters run
FUNNEL_STAGES = (
    "outside_icu_stay",
    "short_stay",
    "early_shift",
    "excluded_label",
    "missing_cam",
)

SCORE_VARIABLES = {kind.value: kind for kind in ScoreKind}


def merge_encounters(encounters: List[RawEncounter]) -> List[RawEncounter]:
    """Merge one patient's encounters that are less than 24 hours apart.

    Args:
        encounters: Encounters of a single patient sorted by admission time.

    Returns:
        Encounters where every remaining gap is at least 24 hours. A merged
        encounter keeps the first encounter's id and static features (gaps
        filled from later encounters) and spans both stays.

    Raises:
        InputValidationError: On unsorted, overlapping or mixed-patient input.
    """
    if not encounters:
        return []
    patients = {enc.patient_id for enc in encounters}
    if len(patients) > 1:
        raise InputValidationError(f"Encounters of several patients: {sorted(patients)}")

    merged: List[RawEncounter] = [encounters[0]]
    for current in encounters[1:]:
        previous = merged[-1]
        if current.admit_time < previous.admit_time:
            raise InputValidationError(
                f"Encounters of patient {current.patient_id} are not sorted by admission"
            )
        if current.admit_time < previous.discharge_time:
            raise InputValidationError(
                f"Encounters {previous.encounter_id} and {current.encounter_id} overlap"
            )
        gap = (current.admit_time - previous.discharge_time).total_seconds() / 60.0
        if gap < ENCOUNTER_MERGE_GAP_MINUTES:
            merged[-1] = _join(previous, current)
        else:
            merged.append(current)
    return merged


def _join(first: RawEncounter, second: RawEncounter) -> RawEncounter:
    static = dict(first.static)
    for name, value in second.static.items():
        if static.get(name) is None:
            static[name] = value
    frames = [frame for frame in (first.events, second.events) if len(frame)]
    events = (
        pd.concat(frames, ignore_index=True)
        .sort_values(["time", "name"], kind="mergesort")
        .reset_index(drop=True)
        if frames
        else first.events
    )
    return RawEncounter(
        patient_id=first.patient_id,
        encounter_id=first.encounter_id,
        admit_time=first.admit_time,
        discharge_time=second.discharge_time,
        death_time=second.death_time if second.death_time is not None else first.death_time,
        static=static,
        events=events,
    )


def shift_grid(admit: pd.Timestamp, discharge: pd.Timestamp) -> List[pd.Timestamp]:
    """Shift starts on the 07:00/19:00 grid from the shift containing ``admit``.

    The first start is the latest grid point at or before admission, so it
    may precede the stay; every start is before discharge.
    """
    day = admit.normalize()
    anchor = pd.Timedelta(hours=SHIFT_ANCHOR_HOUR)
    step = pd.Timedelta(minutes=SHIFT_MINUTES)
    start = day + anchor - step
    while start + step <= admit:
        start += step
    starts = []
    while start < discharge:
        starts.append(start)
        start += step
    return starts


@dataclass
class StayTimeline:
    """A merged stay with event times converted to minutes since admission."""

    encounter: RawEncounter
    shift_starts: np.ndarray
    event_minutes: np.ndarray
    event_names: np.ndarray
    event_values: np.ndarray

    @property
    def stay_id(self) -> str:
        return self.encounter.encounter_id

    @property
    def los_minutes(self) -> float:
        return self.encounter.los_minutes


class EncounterTransformer:
    """Labels the shifts of merged stays and cuts their observation windows."""

    def timeline(self, encounter: RawEncounter) -> StayTimeline:
        starts = shift_grid(encounter.admit_time, encounter.discharge_time)
        shift_starts = np.array(
            [(start - encounter.admit_time).total_seconds() / 60.0 for start in starts],
            dtype=np.float64,
        )
        events = encounter.events
        if len(events):
            minutes = encounter.minutes_since_admit(events["time"])
        else:
            minutes = np.zeros(0, dtype=np.float64)
        return StayTimeline(
            encounter=encounter,
            shift_starts=shift_starts,
            event_minutes=np.asarray(minutes, dtype=np.float64),
            event_names=events["name"].to_numpy(dtype=object),
            event_values=events["value"].to_numpy(dtype=np.float64),
        )

    def stay_scores(self, timeline: StayTimeline) -> StayScores:
        """Score streams from the RASS, CAM and GCS events recorded in the stay."""
        scores = []
        for minute, name, value in zip(
            timeline.event_minutes, timeline.event_names, timeline.event_values
        ):
            kind = SCORE_VARIABLES.get(name)
            if kind is None or minute < 0:
                continue
            if kind is ScoreKind.CAM:
                parsed = CamResult.POSITIVE if value >= 0.5 else CamResult.NEGATIVE
                scores.append(TimedScore(float(minute), kind, parsed))
            else:
                scores.append(TimedScore(float(minute), kind, int(round(value))))

        death = timeline.encounter.death_time
        death_minutes = (
            None
            if death is None
            else (death - timeline.encounter.admit_time).total_seconds() / 60.0
        )
        return StayScores.from_scores(
            timeline.stay_id, list(timeline.shift_starts), scores, death_minutes
        )

    def label_shifts(self, timeline: StayTimeline) -> pd.DataFrame:
        """One row per labeled shift of the stay (nothing after a Dead shift)."""
        stay = self.stay_scores(timeline)
        rows = []
        for index, label in label_stay(stay):
            start = float(timeline.shift_starts[index])
            cam = snapshot_at(stay, start).cam
            rows.append(
                {
                    "patient_id": timeline.encounter.patient_id,
                    "stay_id": timeline.stay_id,
                    "shift_index": index,
                    "shift_start_min": start,
                    "los_min": timeline.los_minutes,
                    "label": label.value,
                    "binary_delirium_label": None if cam is None else cam is CamResult.POSITIVE,
                }
            )
        return pd.DataFrame(rows, columns=SHIFT_COLUMNS)

    def window(
        self, timeline: StayTimeline, shift_start: float
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Events in ``(shift_start - 720, shift_start]`` as offsets from the window start.

        The window is right-closed: an assessment charted exactly at ``shift_start``
        is model input and, being at most 720 minutes old at the shift end, can also
        be the score the shift label is carried forward from.
        """
        window_start = shift_start - SHIFT_MINUTES
        minutes = timeline.event_minutes
        lo = np.searchsorted(minutes, window_start, side="right")
        hi = np.searchsorted(minutes, shift_start, side="right")
        return (
            minutes[lo:hi] - window_start,
            timeline.event_names[lo:hi],
            timeline.event_values[lo:hi],
        )

    def records(self, timeline: StayTimeline, shifts: pd.DataFrame) -> List[ShiftRecord]:
        """Shift records for the retained shift rows of one stay."""
        result = []
        for row in shifts.itertuples(index=False):
            minutes, names, values = self.window(timeline, row.shift_start_min)
            binary = row.binary_delirium_label
            result.append(
                ShiftRecord(
                    patient_id=row.patient_id,
                    stay_id=row.stay_id,
                    shift_index=int(row.shift_index),
                    shift_start=float(row.shift_start_min),
                    label=AcuityLabel.parse(row.label),
                    window_minutes=minutes,
                    window_names=names,
                    window_values=values,
                    static=dict(timeline.encounter.static),
                    binary_delirium_label=None if pd.isna(binary) else bool(binary),
                )
            )
        return result


def filter_shifts(
    shifts: pd.DataFrame, task: str = TASK_BRAIN_ACUITY
) -> Tuple[pd.DataFrame, Dict[str, int]]:
    """Apply the extraction filters in order and count what each one drops.

    Args:
        shifts: Labeled shifts with the :data:`SHIFT_COLUMNS` layout.
        task: ``brain_acuity`` or ``delirium``; the delirium task also drops
            shifts without a CAM result in force.

    Returns:
        Retained shifts and a funnel ``{raw_shifts, <stage>..., retained_shifts}``
        where the dropped counts and the retained count add up to ``raw_shifts``.
    """
    if task not in TASKS:
        raise InputValidationError(f"Unknown task {task!r}; expected one of {TASKS}")

    funnel: Dict[str, int] = {"raw_shifts": len(shifts)}
    conditions = {
        "outside_icu_stay": lambda df: (df["shift_start_min"] >= 0)
        & (df["shift_start_min"] < df["los_min"]),
        "short_stay": lambda df: df["los_min"] >= SHIFT_MINUTES,
        "early_shift": lambda df: df["shift_start_min"] >= SHIFT_MINUTES,
        "excluded_label": lambda df: df["label"] != AcuityLabel.EXCLUDED.value,
        "missing_cam": lambda df: df["binary_delirium_label"].notna()
        if task == TASK_DELIRIUM
        else pd.Series(True, index=df.index),
    }

    retained = shifts
    for stage in FUNNEL_STAGES:
        keep = conditions[stage](retained)
        funnel[stage] = int((~keep).sum())
        retained = retained[keep]

    funnel["retained_shifts"] = len(retained)
    return retained.reset_index(drop=True), funnel


def transform_patient(
    encounters: List[RawEncounter], task: str = TASK_BRAIN_ACUITY
) -> Tuple[List[ShiftRecord], pd.DataFrame, Dict[str, int]]:
    """Merge, label, filter and window one patient's encounters.

    Returns:
        The patient's shift records, every labeled shift (before filtering) and
        the patient's funnel counts.
    """
    transformer = EncounterTransformer()
    records: List[ShiftRecord] = []
    labeled_frames = []
    funnel: Optional[Dict[str, int]] = None

    for stay in merge_encounters(encounters):
        timeline = transformer.timeline(stay)
        labeled = transformer.label_shifts(timeline)
        labeled_frames.append(labeled)
        retained, stay_funnel = filter_shifts(labeled, task)
        records.extend(transformer.records(timeline, retained))
        funnel = (
            stay_funnel
            if funnel is None
            else {key: funnel[key] + stay_funnel[key] for key in funnel}
        )

    labeled_all = (
        pd.concat(labeled_frames, ignore_index=True)
        if labeled_frames
        else pd.DataFrame(columns=SHIFT_COLUMNS)
    )
    if funnel is None:
        funnel = {"raw_shifts": 0, **{stage: 0 for stage in FUNNEL_STAGES}, "retained_shifts": 0}
    return records, labeled_all, funnel
