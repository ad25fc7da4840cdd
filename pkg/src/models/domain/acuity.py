"""Brain status scores and acuity labels."""

import enum
from dataclasses import dataclass
from typing import List, Optional, Union

from src.core.exceptions import InputValidationError

RASS_RANGE = (-5, 4)
GCS_RANGE = (3, 15)
COMA_GCS_MAX = 8


class CamResult(enum.Enum):
    """Confusion Assessment Method outcome."""

    POSITIVE = "Positive"
    NEGATIVE = "Negative"

    @classmethod
    def parse(cls, raw: Union[str, float, int, "CamResult"]) -> "CamResult":
        if isinstance(raw, CamResult):
            return raw
        text = str(raw).strip().lower()
        if text in ("positive", "pos", "1", "1.0", "true"):
            return cls.POSITIVE
        if text in ("negative", "neg", "0", "0.0", "false"):
            return cls.NEGATIVE
        raise InputValidationError(f"Unrecognized CAM value: {raw!r}")


class ScoreKind(enum.Enum):
    """Assessment instruments used by the phenotype."""

    RASS = "rass"
    CAM = "cam"
    GCS = "gcs"

    @classmethod
    def parse(cls, raw: str) -> "ScoreKind":
        try:
            return cls(str(raw).strip().lower())
        except ValueError as exc:
            raise InputValidationError(f"Unknown score kind: {raw!r}") from exc


class AcuityLabel(enum.Enum):
    """Brain acuity phenotype of a shift."""

    NORMAL = "Normal"
    DELIRIUM = "Delirium"
    COMA = "Coma"
    DEAD = "Dead"
    EXCLUDED = "Excluded"

    @property
    def class_index(self) -> int:
        if self is AcuityLabel.EXCLUDED:
            raise InputValidationError("Excluded shifts have no class index")
        return CLASS_ORDER.index(self)

    @classmethod
    def from_index(cls, index: int) -> "AcuityLabel":
        return CLASS_ORDER[index]

    @classmethod
    def parse(cls, raw: str) -> "AcuityLabel":
        for label in cls:
            if label.value.lower() == str(raw).strip().lower():
                return label
        raise InputValidationError(f"Unknown acuity label: {raw!r}")


# Model output order (y_1..y_4)
CLASS_ORDER: List[AcuityLabel] = [
    AcuityLabel.NORMAL,
    AcuityLabel.DELIRIUM,
    AcuityLabel.COMA,
    AcuityLabel.DEAD,
]
CLASS_NAMES = [label.value for label in CLASS_ORDER]


def _check_rass(value: Optional[int]) -> None:
    if value is None:
        return
    if int(value) != value or not RASS_RANGE[0] <= value <= RASS_RANGE[1]:
        raise InputValidationError(f"RASS must be an integer in [-5, 4], got {value}")


def _check_gcs(value: Optional[int]) -> None:
    if value is None:
        return
    if int(value) != value or not GCS_RANGE[0] <= value <= GCS_RANGE[1]:
        raise InputValidationError(f"GCS must be an integer in [3, 15], got {value}")


@dataclass(frozen=True)
class TimedScore:
    """One nurse assessment, timed in minutes since ICU admission."""

    time: float
    kind: ScoreKind
    value: Union[int, CamResult]

    def __post_init__(self) -> None:
        if self.time < 0:
            raise InputValidationError(f"Score time must be >= 0, got {self.time}")
        if self.kind is ScoreKind.RASS:
            _check_rass(self.value)  # type: ignore[arg-type]
        elif self.kind is ScoreKind.GCS:
            _check_gcs(self.value)  # type: ignore[arg-type]
        elif not isinstance(self.value, CamResult):
            raise InputValidationError("CAM scores must carry a CamResult value")

    @classmethod
    def parse(cls, time: float, kind: str, value: str) -> "TimedScore":
        """Build a score from raw CSV fields."""
        score_kind = ScoreKind.parse(kind)
        parsed: Union[int, CamResult]
        if score_kind is ScoreKind.CAM:
            parsed = CamResult.parse(value)
        else:
            try:
                number = float(value)
            except (TypeError, ValueError) as exc:
                raise InputValidationError(
                    f"Non-numeric {score_kind.value} value: {value!r}"
                ) from exc
            if not number.is_integer():
                raise InputValidationError(
                    f"{score_kind.value} must be an integer, got {value!r}"
                )
            parsed = int(number)
        return cls(time=float(time), kind=score_kind, value=parsed)


@dataclass(frozen=True)
class ScoreSnapshot:
    """Scores in force at the end of a shift."""

    rass: Optional[int] = None
    cam: Optional[CamResult] = None
    gcs: Optional[int] = None
    died_in_shift: bool = False

    def __post_init__(self) -> None:
        _check_rass(self.rass)
        _check_gcs(self.gcs)
        if self.cam is not None and not isinstance(self.cam, CamResult):
            raise InputValidationError("cam must be a CamResult or None")

    @property
    def all_missing(self) -> bool:
        return self.rass is None and self.cam is None and self.gcs is None


@dataclass(frozen=True)
class PredictionOutput:
    """Class probabilities for one shift.

    Four-class heads give ``(y_Normal, y_Delirium, y_Coma, y_Dead)``; the
    binary delirium head gives a single probability, and ``predicted_class``
    is then 1 for delirium and 0 otherwise.
    """

    probabilities: tuple
    predicted_class: int

    @classmethod
    def from_probabilities(cls, probabilities) -> "PredictionOutput":
        values = tuple(float(p) for p in probabilities)
        if len(values) == 1:
            return cls(values, int(values[0] > 0.5))
        # max() keeps the first maximum, so ties go to the lowest class index
        best = max(range(len(values)), key=lambda i: values[i])
        return cls(values, best)

    @property
    def label(self) -> Optional[AcuityLabel]:
        if len(self.probabilities) == 1:
            return None
        return AcuityLabel.from_index(self.predicted_class)
