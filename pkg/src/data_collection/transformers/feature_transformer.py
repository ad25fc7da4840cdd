"""Feature vocabulary, sequence clipping and the tabular (aggregate) path."""

from typing import Dict, Iterable, List, Mapping, Sequence, Set, TypeVar

import numpy as np
import pandas as pd

from src.core.config import DEFAULT_PREVALENCE_THRESHOLD
from src.core.exceptions import ConfigError, InputValidationError
from src.models.domain.encounter import (
    EncodedWindow,
    FeatureVocabulary,
    VariableKind,
    VariableSpec,
    VocabularyEntry,
)

Window = TypeVar("Window")


def fit_vocabulary(
    stay_variables: Mapping[str, Iterable[str]],
    catalog: Sequence[VariableSpec],
    prevalence_threshold: float = DEFAULT_PREVALENCE_THRESHOLD,
) -> FeatureVocabulary:
    """Decide which variables the models see, from training stays only.

    A lab or medication is retained when the fraction of stays in which it
    appears is at least ``prevalence_threshold``; vitals and scores are always
    retained. Retained variables get codes ``0..V-1`` in catalog order, the
    dropped ones the codes after them.

    Args:
        stay_variables: Variable names observed per training stay.
        catalog: Declared variables, in a fixed order.
        prevalence_threshold: Fraction in (0, 1).

    Raises:
        ConfigError: If the threshold is outside (0, 1).
        InputValidationError: If there are no training stays.
    """
    if not 0.0 < prevalence_threshold < 1.0:
        raise ConfigError(
            f"prevalence_threshold must be in (0, 1), got {prevalence_threshold}"
        )
    if not stay_variables:
        raise InputValidationError("Cannot fit a vocabulary on an empty training set")

    stay_count = len(stay_variables)
    counts: Dict[str, int] = {spec.name: 0 for spec in catalog}
    for names in stay_variables.values():
        for name in set(names):
            if name in counts:
                counts[name] += 1

    retain = {
        spec.name: spec.kind.always_retained
        or counts[spec.name] / stay_count >= prevalence_threshold
        for spec in catalog
    }
    ordered = [spec for spec in catalog if retain[spec.name]] + [
        spec for spec in catalog if not retain[spec.name]
    ]
    return FeatureVocabulary(
        entries=tuple(
            VocabularyEntry(spec.name, code, spec.kind, retain[spec.name])
            for code, spec in enumerate(ordered)
        )
    )


def stay_variable_sets(records: Iterable) -> Dict[str, Set[str]]:
    """Variables seen per stay across the windows of the given shift records."""
    seen: Dict[str, Set[str]] = {}
    for record in records:
        seen.setdefault(record.stay_id, set()).update(record.window_names.tolist())
    return seen


def clip_sequence(window: Window, max_len: int) -> Window:
    """Keep the ``max_len`` most recent observations of a time-ordered window."""
    if max_len < 1:
        raise ConfigError(f"max_sequence_length must be at least 1, got {max_len}")
    if len(window) <= max_len:
        return window
    return window[len(window) - max_len :]


def aggregate_window(window: EncodedWindow, vocabulary: FeatureVocabulary) -> np.ndarray:
    """Mean value per retained variable; ``NaN`` where the variable is absent."""
    size = vocabulary.size
    if len(window) and window.f.max() >= size:
        raise InputValidationError("Window carries a code outside the retained vocabulary")
    sums = np.bincount(window.f, weights=window.v, minlength=size)
    counts = np.bincount(window.f, minlength=size)
    means = np.full(size, np.nan)
    present = counts > 0
    means[present] = sums[present] / counts[present]
    return means


def fit_tabular_means(matrix: np.ndarray) -> np.ndarray:
    """Column means over observed training values; unobserved columns get 0."""
    observed = ~np.isnan(matrix)
    counts = observed.sum(axis=0)
    sums = np.where(observed, matrix, 0.0).sum(axis=0)
    return np.divide(sums, counts, out=np.zeros(matrix.shape[1]), where=counts > 0)


def impute_tabular(
    matrix: np.ndarray,
    stay_ids: Sequence[str],
    medication_columns: Sequence[bool],
    train_means: np.ndarray,
) -> np.ndarray:
    """Fill a per-shift aggregate matrix stay by stay.

    Rows must be ordered by shift within each stay. Interior gaps are
    linearly interpolated, edges are forward/back filled inside the stay,
    and anything still missing becomes 0 for medications and the training
    mean otherwise.
    """
    if matrix.shape[0] != len(stay_ids):
        raise InputValidationError("One stay id per matrix row is required")
    frame = pd.DataFrame(matrix, dtype=np.float64)
    if len(frame):
        frame = frame.groupby(np.asarray(stay_ids), sort=False).transform(_fill_series)

    result = frame.to_numpy(dtype=np.float64, copy=True)
    fallback = np.where(np.asarray(medication_columns, dtype=bool), 0.0, train_means)
    missing = np.isnan(result)
    result[missing] = np.broadcast_to(fallback, result.shape)[missing]
    return result


def _fill_series(series: pd.Series) -> pd.Series:
    return series.interpolate(method="linear", limit_area="inside").ffill().bfill()


def tabular_columns(vocabulary: FeatureVocabulary, static_names: List[str]) -> List[str]:
    return [f"mean_{name}" for name in vocabulary.retained_names] + [
        f"static_{name}" for name in static_names
    ]


def medication_mask(vocabulary: FeatureVocabulary) -> np.ndarray:
    return np.array(
        [vocabulary.kind_of(name) is VariableKind.MEDICATION for name in vocabulary.retained_names],
        dtype=bool,
    )
