"""Fit-on-train, transform-anywhere preprocessing of shift records."""

from typing import Dict, List, Optional, Sequence

import numpy as np

from src.core.config import DEFAULT_MAX_SEQUENCE_LENGTH, DEFAULT_PREVALENCE_THRESHOLD, SHIFT_MINUTES
from src.core.exceptions import InputValidationError
from src.core.logger import get_logger
from src.data_collection.transformers.feature_transformer import (
    aggregate_window,
    clip_sequence,
    fit_tabular_means,
    fit_vocabulary,
    impute_tabular,
    medication_mask,
    stay_variable_sets,
    tabular_columns as tabular_column_names,
)
from src.data_collection.transformers.normalization import (
    StaticEncoder,
    VariableStats,
    clip_outliers,
    fit_minmax,
    scale_minmax,
    standardize,
)
from src.models.domain.encounter import (
    EncodedShift,
    EncodedWindow,
    FeatureVocabulary,
    ShiftRecord,
    VariableSpec,
)

logger = get_logger(__name__)

STATE_VERSION = 1


class ShiftPreprocessor:
    """Turns :class:`ShiftRecord` objects into model inputs.

    ``fit`` only ever sees training records: the vocabulary, outlier bounds,
    medians, means, standard deviations, static encoding and tabular min/max
    all come from them. ``encode`` and ``tabular`` then apply those statistics
    to any split.
    """

    def __init__(
        self,
        catalog: Sequence[VariableSpec],
        prevalence_threshold: float = DEFAULT_PREVALENCE_THRESHOLD,
        max_sequence_length: int = DEFAULT_MAX_SEQUENCE_LENGTH,
    ):
        self.catalog = list(catalog)
        self.prevalence_threshold = prevalence_threshold
        self.max_sequence_length = max_sequence_length
        self.vocabulary: Optional[FeatureVocabulary] = None
        self.stats: Dict[str, VariableStats] = {}
        self.static_encoder = StaticEncoder()
        self.tabular_means: Optional[np.ndarray] = None
        self.tabular_min: Optional[np.ndarray] = None
        self.tabular_max: Optional[np.ndarray] = None

    @property
    def fitted(self) -> bool:
        return self.vocabulary is not None

    def fit(self, records: Sequence[ShiftRecord]) -> "ShiftPreprocessor":
        if not records:
            raise InputValidationError("Cannot fit preprocessing on an empty training set")

        self.vocabulary = fit_vocabulary(
            stay_variable_sets(records), self.catalog, self.prevalence_threshold
        )
        retained = set(self.vocabulary.retained_names)

        pooled: Dict[str, List[np.ndarray]] = {name: [] for name in retained}
        for record in records:
            names, values = self._clipped_raw(record, retained)
            for name in np.unique(names):
                pooled[name].append(values[names == name])
        self.stats = {
            name: VariableStats.fit(
                np.concatenate(chunks) if chunks else np.zeros(0)
            )
            for name, chunks in pooled.items()
        }

        self.static_encoder = StaticEncoder().fit([record.static for record in records])

        raw = np.vstack([self._aggregate(record) for record in records])
        self.tabular_means = fit_tabular_means(raw)
        self.tabular_min, self.tabular_max = fit_minmax(self._unscaled(raw, records))

        logger.debug(
            "preprocessor_fitted",
            records=len(records),
            retained=self.vocabulary.size,
            static_dim=self.static_encoder.dim,
        )
        return self

    def _require_fitted(self) -> FeatureVocabulary:
        if self.vocabulary is None:
            raise InputValidationError("Preprocessor used before fit")
        return self.vocabulary

    def _clipped_raw(self, record: ShiftRecord, retained: set) -> tuple:
        keep = np.fromiter(
            (name in retained for name in record.window_names), dtype=bool, count=len(record)
        )
        names = clip_sequence(record.window_names[keep], self.max_sequence_length)
        values = clip_sequence(record.window_values[keep], self.max_sequence_length)
        return names, values

    def window(self, record: ShiftRecord) -> EncodedWindow:
        """Triplets with normalized time, retained code and standardized value."""
        vocabulary = self._require_fitted()
        retained = set(vocabulary.retained_names)
        keep = np.fromiter(
            (name in retained for name in record.window_names), dtype=bool, count=len(record)
        )
        minutes = clip_sequence(record.window_minutes[keep], self.max_sequence_length)
        names = clip_sequence(record.window_names[keep], self.max_sequence_length)
        values = clip_sequence(record.window_values[keep], self.max_sequence_length)

        codes = np.array([vocabulary.code_of(name) for name in names], dtype=np.int64)
        scaled = np.empty(len(values), dtype=np.float64)
        for name in np.unique(names):
            mask = names == name
            stats = self.stats[name]
            column = clip_outliers(values[mask], stats.low, stats.high)
            column = np.where(np.isnan(column), stats.median, column)
            scaled[mask] = standardize(column, stats.mean, stats.std)
        return EncodedWindow(t=minutes / SHIFT_MINUTES, f=codes, v=scaled)

    def encode(self, record: ShiftRecord) -> EncodedShift:
        vocabulary = self._require_fitted()
        return EncodedShift(
            patient_id=record.patient_id,
            stay_id=record.stay_id,
            shift_index=record.shift_index,
            window=self.window(record),
            static_vector=self.static_encoder.transform(record.static),
            label=record.label,
            binary_delirium_label=record.binary_delirium_label,
            vocabulary_hash=vocabulary.hash,
        )

    def encode_all(self, records: Sequence[ShiftRecord]) -> List[EncodedShift]:
        return [self.encode(record) for record in records]

    def _aggregate(self, record: ShiftRecord) -> np.ndarray:
        """Window means of the winsorized raw values."""
        vocabulary = self._require_fitted()
        retained = set(vocabulary.retained_names)
        names, values = self._clipped_raw(record, retained)
        codes = np.array([vocabulary.code_of(name) for name in names], dtype=np.int64)
        clipped = np.empty(len(values), dtype=np.float64)
        for name in np.unique(names):
            mask = names == name
            stats = self.stats.get(name)
            clipped[mask] = (
                values[mask] if stats is None else clip_outliers(values[mask], stats.low, stats.high)
            )
        window = EncodedWindow(t=np.zeros(len(codes)), f=codes, v=clipped)
        return aggregate_window(window, vocabulary)

    def _impute(self, raw: np.ndarray, records: Sequence[ShiftRecord]) -> np.ndarray:
        order = sorted(range(len(records)), key=lambda i: records[i].key)
        ordered = impute_tabular(
            raw[order],
            [records[i].stay_id for i in order],
            medication_mask(self._require_fitted()),
            self.tabular_means,
        )
        result = np.empty_like(ordered)
        result[order] = ordered
        return result

    def tabular(self, records: Sequence[ShiftRecord]) -> np.ndarray:
        """Aggregated, imputed, static-augmented and min-max scaled feature matrix."""
        self._require_fitted()
        if not records:
            return np.zeros((0, len(self.tabular_columns)))
        raw = np.vstack([self._aggregate(record) for record in records])
        return scale_minmax(self._unscaled(raw, records), self.tabular_min, self.tabular_max)

    def _unscaled(self, raw: np.ndarray, records: Sequence[ShiftRecord]) -> np.ndarray:
        static = np.vstack([self.static_encoder.transform(r.static) for r in records])
        return np.hstack([self._impute(raw, records), static])

    @property
    def tabular_columns(self) -> List[str]:
        return tabular_column_names(self._require_fitted(), self.static_encoder.names)

    def to_state(self) -> Dict:
        """JSON-ready fitted state."""
        vocabulary = self._require_fitted()
        return {
            "version": STATE_VERSION,
            "catalog": [spec.to_dict() for spec in self.catalog],
            "prevalence_threshold": self.prevalence_threshold,
            "max_sequence_length": self.max_sequence_length,
            "vocabulary": vocabulary.to_list(),
            "stats": {name: self.stats[name].to_dict() for name in sorted(self.stats)},
            "static": self.static_encoder.to_dict(),
            "tabular": {
                "means": self.tabular_means.tolist(),
                "min": self.tabular_min.tolist(),
                "max": self.tabular_max.tolist(),
            },
        }

    @classmethod
    def from_state(cls, state: Dict) -> "ShiftPreprocessor":
        if state.get("version") != STATE_VERSION:
            raise InputValidationError(
                f"Unsupported preprocessor state version {state.get('version')}"
            )
        preprocessor = cls(
            catalog=[VariableSpec.from_dict(item) for item in state["catalog"]],
            prevalence_threshold=float(state["prevalence_threshold"]),
            max_sequence_length=int(state["max_sequence_length"]),
        )
        preprocessor.vocabulary = FeatureVocabulary.from_list(state["vocabulary"])
        preprocessor.stats = {
            name: VariableStats.from_dict(item) for name, item in state["stats"].items()
        }
        preprocessor.static_encoder = StaticEncoder.from_dict(state["static"])
        preprocessor.tabular_means = np.array(state["tabular"]["means"], dtype=np.float64)
        preprocessor.tabular_min = np.array(state["tabular"]["min"], dtype=np.float64)
        preprocessor.tabular_max = np.array(state["tabular"]["max"], dtype=np.float64)
        return preprocessor
