"""ICU encounters, observation windows and shift records."""

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.config import SHIFT_MINUTES
from src.core.exceptions import InputValidationError
from src.models.domain.acuity import AcuityLabel

EVENT_COLUMNS = ["time", "name", "value", "unit"]


class VariableKind(enum.Enum):
    """Temporal variable families of the feature schema."""

    VITAL = "Vital"
    LAB = "Lab"
    MEDICATION = "Medication"
    SCORE = "Score"

    @property
    def always_retained(self) -> bool:
        return self in (VariableKind.VITAL, VariableKind.SCORE)


def canonical_name(raw: str) -> str:
    """Canonical variable name: lower case, single underscores."""
    text = str(raw).strip().lower()
    for separator in (" ", "-", "/", "."):
        text = text.replace(separator, "_")
    while "__" in text:
        text = text.replace("__", "_")
    return text.strip("_")


def canonical_unit(raw: Optional[str]) -> str:
    if raw is None or (isinstance(raw, float) and np.isnan(raw)):
        return ""
    return str(raw).strip().lower()


@dataclass(frozen=True)
class VariableSpec:
    """A declared temporal variable with its one accepted unit."""

    name: str
    kind: VariableKind
    unit: str

    def to_dict(self) -> Dict[str, str]:
        return {"name": self.name, "kind": self.kind.value, "unit": self.unit}

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "VariableSpec":
        return cls(
            name=canonical_name(data["name"]),
            kind=VariableKind(data["kind"]),
            unit=canonical_unit(data["unit"]),
        )


@dataclass(frozen=True)
class VocabularyEntry:
    name: str
    code: int
    kind: VariableKind
    retain: bool


@dataclass(frozen=True)
class FeatureVocabulary:
    """Ordered variable codes; retained variables own codes ``0..size-1``."""

    entries: tuple

    def __post_init__(self) -> None:
        codes = sorted(entry.code for entry in self.entries)
        if codes != list(range(len(codes))):
            raise InputValidationError("Vocabulary codes must be dense and unique")
        retained = sorted(entry.code for entry in self.entries if entry.retain)
        if retained != list(range(len(retained))):
            raise InputValidationError("Retained variables must own the lowest codes")

    @property
    def size(self) -> int:
        """Number of retained variables, i.e. rows of the feature table."""
        return sum(1 for entry in self.entries if entry.retain)

    @property
    def retained_names(self) -> List[str]:
        return [e.name for e in sorted(self.entries, key=lambda e: e.code) if e.retain]

    def code_of(self, name: str) -> Optional[int]:
        """Code of a retained variable, ``None`` if unknown or dropped."""
        return self._retained_codes().get(name)

    def kind_of(self, name: str) -> VariableKind:
        for entry in self.entries:
            if entry.name == name:
                return entry.kind
        raise KeyError(name)

    def _retained_codes(self) -> Dict[str, int]:
        cache = self.__dict__.get("_codes")
        if cache is None:
            cache = {e.name: e.code for e in self.entries if e.retain}
            object.__setattr__(self, "_codes", cache)
        return cache

    def to_list(self) -> List[Dict]:
        return [
            {"name": e.name, "code": e.code, "kind": e.kind.value, "retain": e.retain}
            for e in sorted(self.entries, key=lambda e: e.code)
        ]

    @classmethod
    def from_list(cls, data: Sequence[Dict]) -> "FeatureVocabulary":
        return cls(
            entries=tuple(
                VocabularyEntry(
                    name=item["name"],
                    code=int(item["code"]),
                    kind=VariableKind(item["kind"]),
                    retain=bool(item["retain"]),
                )
                for item in data
            )
        )

    @property
    def hash(self) -> str:
        text = json.dumps(self.to_list(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RawEncounter:
    """One ICU encounter as read from the raw CSV files.

    ``events`` has the columns ``time`` (datetime64), ``name`` (canonical),
    ``value`` (float, NaN when missing) and ``unit``; ``raw_values`` keeps
    the unparsed strings for score variables such as CAM.
    """

    patient_id: str
    encounter_id: str
    admit_time: pd.Timestamp
    discharge_time: pd.Timestamp
    death_time: Optional[pd.Timestamp] = None
    static: Dict[str, Optional[str]] = field(default_factory=dict)
    events: pd.DataFrame = field(
        default_factory=lambda: pd.DataFrame(columns=EVENT_COLUMNS)
    )

    def __post_init__(self) -> None:
        if not self.admit_time < self.discharge_time:
            raise InputValidationError(
                f"Encounter {self.encounter_id}: admission must precede discharge"
            )

    @property
    def los_minutes(self) -> float:
        return (self.discharge_time - self.admit_time).total_seconds() / 60.0

    def minutes_since_admit(self, times: pd.Series) -> np.ndarray:
        return ((times - self.admit_time).dt.total_seconds() / 60.0).to_numpy()


@dataclass(frozen=True)
class ShiftRecord:
    """A labeled shift with its raw 12-hour observation window.

    ``window_minutes`` are offsets from the window start, i.e. the event
    time minus ``shift_start - 720``, so every entry lies in ``(0, 720]``.
    """

    patient_id: str
    stay_id: str
    shift_index: int
    shift_start: float
    label: AcuityLabel
    window_minutes: np.ndarray
    window_names: np.ndarray
    window_values: np.ndarray
    static: Dict[str, Optional[str]] = field(default_factory=dict)
    binary_delirium_label: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.label is AcuityLabel.EXCLUDED:
            raise InputValidationError("Excluded shifts cannot become records")
        if len(self.window_minutes) and (
            self.window_minutes.min() <= 0 or self.window_minutes.max() > SHIFT_MINUTES
        ):
            raise InputValidationError("Window offsets must lie in (0, 720]")

    @property
    def key(self) -> tuple:
        return (self.patient_id, self.stay_id, self.shift_index)

    def __len__(self) -> int:
        return len(self.window_minutes)


@dataclass(frozen=True)
class ObservationTriplet:
    """One encoded observation: normalized time, variable code, value."""

    t: float
    f: int
    v: float


@dataclass(frozen=True)
class EncodedWindow:
    """Array form of a triplet sequence, oldest first."""

    t: np.ndarray
    f: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, index: slice) -> "EncodedWindow":
        return EncodedWindow(t=self.t[index], f=self.f[index], v=self.v[index])

    def triplets(self) -> List[ObservationTriplet]:
        return [
            ObservationTriplet(float(t), int(f), float(v))
            for t, f, v in zip(self.t, self.f, self.v)
        ]

    @classmethod
    def from_triplets(cls, triplets: Sequence[ObservationTriplet]) -> "EncodedWindow":
        return cls(
            t=np.array([tr.t for tr in triplets], dtype=np.float64),
            f=np.array([tr.f for tr in triplets], dtype=np.int64),
            v=np.array([tr.v for tr in triplets], dtype=np.float64),
        )

    def permuted(self, order: np.ndarray) -> "EncodedWindow":
        return EncodedWindow(t=self.t[order], f=self.f[order], v=self.v[order])


@dataclass(frozen=True)
class EncodedShift:
    """Model-ready shift: encoded window plus fixed-length static vector."""

    patient_id: str
    stay_id: str
    shift_index: int
    window: EncodedWindow
    static_vector: np.ndarray
    label: AcuityLabel
    binary_delirium_label: Optional[bool]
    vocabulary_hash: str


@dataclass
class DatasetSplit:
    """Patient-disjoint train/validation/test partition with CV folds."""

    train: List[ShiftRecord]
    validation: List[ShiftRecord]
    test: List[ShiftRecord]
    folds: Dict[str, int]
    test_patients: List[str]
    fold_count: int

    def fold_records(self, fold: int) -> tuple:
        """(train, validation) records when ``fold`` is held out for validation."""
        pool = sorted(self.train + self.validation, key=lambda r: r.key)
        train = [r for r in pool if self.folds[r.patient_id] != fold]
        validation = [r for r in pool if self.folds[r.patient_id] == fold]
        return train, validation
