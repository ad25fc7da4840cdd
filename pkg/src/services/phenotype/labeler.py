"""Brain acuity phenotype labeling.

Each 12-hour nursing shift is labeled from the RASS, CAM and GCS scores in
force at the end of the shift plus a mortality flag:

1. death inside the shift -> Dead
2. no score in force at all -> Excluded
3. RASS below -3 -> Coma
4. RASS of exactly -3 -> GCS tiebreak (<= 8 Coma, otherwise Delirium;
   a missing GCS resolves to Coma)
5. RASS above -3 -> CAM decides (Positive Delirium, Negative Normal);
   with CAM missing, GCS <= 8 is Coma and anything else Normal
6. RASS missing -> GCS <= 8 is Coma, otherwise CAM decides as in 5

Shifts own the assessments recorded after their start up to and including
their end, and a missing score is carried forward from the latest earlier
assessment when that one is at most 12 hours old.
"""

import bisect
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.core.config import CARRY_FORWARD_MINUTES, SHIFT_MINUTES
from src.core.exceptions import InputValidationError
from src.core.logger import get_logger
from src.models.domain.acuity import (
    COMA_GCS_MAX,
    AcuityLabel,
    CamResult,
    ScoreKind,
    ScoreSnapshot,
    TimedScore,
)

logger = get_logger(__name__)

ScoreValue = Union[int, CamResult]


def carry_forward(
    scores: Sequence[TimedScore],
    query_time: float,
    horizon: float = CARRY_FORWARD_MINUTES,
) -> Optional[ScoreValue]:
    """Latest score at or before ``query_time`` that is at most ``horizon`` old.

    Args:
        scores: Assessments of a single kind, sorted ascending by time.
        query_time: Minutes since admission.
        horizon: Validity window in minutes (inclusive).

    Returns:
        The score value, or ``None`` when nothing valid is in force.

    Raises:
        InputValidationError: If ``scores`` is not sorted by time.
    """
    times = [score.time for score in scores]
    if any(later < earlier for earlier, later in zip(times, times[1:])):
        raise InputValidationError("Scores must be sorted ascending by time")

    position = bisect.bisect_right(times, query_time)
    if position == 0:
        return None
    latest = scores[position - 1]
    if query_time - latest.time > horizon:
        return None
    return latest.value


def label_shift(snapshot: ScoreSnapshot) -> AcuityLabel:
    """Apply the phenotype decision logic to one shift snapshot."""
    if snapshot.died_in_shift:
        return AcuityLabel.DEAD
    if snapshot.all_missing:
        return AcuityLabel.EXCLUDED

    rass, cam, gcs = snapshot.rass, snapshot.cam, snapshot.gcs
    gcs_comatose = gcs is not None and gcs <= COMA_GCS_MAX

    if rass is not None and rass < -3:
        return AcuityLabel.COMA
    if rass is None and gcs_comatose:
        return AcuityLabel.COMA
    if rass == -3:
        if gcs is None or gcs_comatose:
            return AcuityLabel.COMA
        return AcuityLabel.DELIRIUM

    # RASS above -3, or missing with a non-comatose GCS
    if cam is CamResult.POSITIVE:
        return AcuityLabel.DELIRIUM
    if cam is CamResult.NEGATIVE:
        return AcuityLabel.NORMAL
    if gcs_comatose:
        return AcuityLabel.COMA
    return AcuityLabel.NORMAL


@dataclass
class StayScores:
    """Score streams and shift grid of one ICU stay, in minutes since admission."""

    stay_id: str
    shift_starts: List[float]
    scores: Dict[ScoreKind, List[TimedScore]] = field(default_factory=dict)
    death_time: Optional[float] = None

    @classmethod
    def from_scores(
        cls,
        stay_id: str,
        shift_starts: List[float],
        scores: Sequence[TimedScore],
        death_time: Optional[float] = None,
    ) -> "StayScores":
        streams: Dict[ScoreKind, List[TimedScore]] = {kind: [] for kind in ScoreKind}
        for score in sorted(scores, key=lambda s: (s.time, s.kind.value)):
            streams[score.kind].append(score)
        return cls(stay_id, shift_starts, streams, death_time)


def snapshot_at(stay: StayScores, shift_start: float) -> ScoreSnapshot:
    """Scores in force at the end of the shift starting at ``shift_start``."""
    shift_end = shift_start + SHIFT_MINUTES
    values = {
        kind: carry_forward(stay.scores.get(kind, []), shift_end) for kind in ScoreKind
    }
    died = stay.death_time is not None and shift_start < stay.death_time <= shift_end
    return ScoreSnapshot(
        rass=values[ScoreKind.RASS],  # type: ignore[arg-type]
        cam=values[ScoreKind.CAM],  # type: ignore[arg-type]
        gcs=values[ScoreKind.GCS],  # type: ignore[arg-type]
        died_in_shift=died,
    )


def label_stay(stay: StayScores) -> List[Tuple[int, AcuityLabel]]:
    """Label every shift of a stay; nothing is emitted after a Dead shift."""
    starts = stay.shift_starts
    for earlier, later in zip(starts, starts[1:]):
        if later - earlier < SHIFT_MINUTES:
            raise InputValidationError(
                f"Stay {stay.stay_id}: shifts starting at {earlier} and {later} overlap"
            )

    labels: List[Tuple[int, AcuityLabel]] = []
    for index, start in enumerate(starts):
        label = label_shift(snapshot_at(stay, start))
        labels.append((index, label))
        if label is AcuityLabel.DEAD:
            break
    return labels


def label_scores_frame(scores: pd.DataFrame) -> pd.DataFrame:
    """Label a long-form score table.

    The table carries ``patient_id, stay_id, time_min, kind, value``. Without
    admission clock times the shift grid is anchored at admission (minute 0)
    and extends to cover the last assessment of each stay.

    Returns:
        DataFrame with ``stay_id, shift_index, label`` sorted by stay and shift.
    """
    required = {"patient_id", "stay_id", "time_min", "kind", "value"}
    missing = required - set(scores.columns)
    if missing:
        raise InputValidationError(f"Missing score columns: {sorted(missing)}")

    rows = []
    for stay_id, group in scores.groupby("stay_id", sort=True):
        parsed = [
            TimedScore.parse(row.time_min, row.kind, row.value)
            for row in group.itertuples(index=False)
        ]
        last = max(score.time for score in parsed)
        shift_count = max(1, int(-(-last // SHIFT_MINUTES)))
        starts = [float(i * SHIFT_MINUTES) for i in range(shift_count)]
        stay = StayScores.from_scores(str(stay_id), starts, parsed)
        for index, label in label_stay(stay):
            rows.append(
                {"stay_id": str(stay_id), "shift_index": index, "label": label.value}
            )

    logger.info("scores_labeled", stays=scores["stay_id"].nunique(), shifts=len(rows))
    return pd.DataFrame(rows, columns=["stay_id", "shift_index", "label"])
