"""Domain models for brain acuity prediction."""

from .acuity import (
    CLASS_NAMES,
    CLASS_ORDER,
    AcuityLabel,
    CamResult,
    PredictionOutput,
    ScoreKind,
    ScoreSnapshot,
    TimedScore,
)
from .encounter import (
    DatasetSplit,
    EncodedShift,
    EncodedWindow,
    FeatureVocabulary,
    ObservationTriplet,
    RawEncounter,
    ShiftRecord,
    VariableKind,
    VariableSpec,
    VocabularyEntry,
    canonical_name,
    canonical_unit,
)

__all__ = [
    "CLASS_NAMES",
    "CLASS_ORDER",
    "AcuityLabel",
    "CamResult",
    "PredictionOutput",
    "ScoreKind",
    "ScoreSnapshot",
    "TimedScore",
    "DatasetSplit",
    "EncodedShift",
    "EncodedWindow",
    "FeatureVocabulary",
    "ObservationTriplet",
    "RawEncounter",
    "ShiftRecord",
    "VariableKind",
    "VariableSpec",
    "VocabularyEntry",
    "canonical_name",
    "canonical_unit",
]
