"""Winsorization, standard scaling, min-max scaling and static-feature encoding.

Every statistic here is fit on training rows and stored as plain floats so a
fitted transform can travel inside a dataset manifest or a model checkpoint.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.exceptions import InputValidationError

OUTLIER_PERCENTILES = (1.0, 99.0)


@dataclass(frozen=True)
class VariableStats:
    """Fitted statistics of one numeric variable."""

    low: float
    high: float
    median: float
    mean: float
    std: float

    @classmethod
    def fit(cls, values: np.ndarray) -> "VariableStats":
        """Fit bounds on the raw values, then median/mean/std on the clipped ones."""
        values = np.asarray(values, dtype=np.float64)
        values = values[~np.isnan(values)]
        if values.size == 0:
            return cls(low=-np.inf, high=np.inf, median=0.0, mean=0.0, std=0.0)
        low, high = percentile_bounds(values)
        clipped = clip_outliers(values, low, high)
        mean, std = fit_standard(clipped)
        return cls(
            low=low, high=high, median=float(np.median(clipped)), mean=mean, std=std
        )

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {k: (None if not np.isfinite(v) else float(v)) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Optional[float]]) -> "VariableStats":
        return cls(
            low=-np.inf if data["low"] is None else float(data["low"]),
            high=np.inf if data["high"] is None else float(data["high"]),
            median=float(data["median"]),
            mean=float(data["mean"]),
            std=float(data["std"]),
        )


def percentile_bounds(values: np.ndarray) -> Tuple[float, float]:
    """Nearest-rank 1st and 99th percentiles; ``(min, max)`` below two values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputValidationError("Cannot fit percentile bounds on no values")
    if values.size < 2:
        return float(values.min()), float(values.max())
    low, high = np.percentile(values, OUTLIER_PERCENTILES, method="inverted_cdf")
    return float(low), float(high)


def clip_outliers(values: np.ndarray, low: float, high: float) -> np.ndarray:
    """Winsorize: clamp values to ``[low, high]``."""
    return np.clip(np.asarray(values, dtype=np.float64), low, high)


def fit_standard(values: np.ndarray) -> Tuple[float, float]:
    """Mean and population standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0, 0.0
    return float(values.mean()), float(values.std())


def standardize(values: np.ndarray, mean: float, std: float) -> np.ndarray:
    """``(x - mean) / std``; a zero ``std`` maps everything to 0."""
    values = np.asarray(values, dtype=np.float64)
    if std == 0.0:
        return np.zeros_like(values)
    return (values - mean) / std


def fit_minmax(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if matrix.shape[0] == 0:
        raise InputValidationError("Cannot fit min-max bounds on an empty matrix")
    return matrix.min(axis=0), matrix.max(axis=0)


def scale_minmax(matrix: np.ndarray, mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    """Scale to [0, 1] with training bounds, clamping and zeroing constant columns."""
    span = np.asarray(maxs, dtype=np.float64) - np.asarray(mins, dtype=np.float64)
    constant = span == 0
    scaled = (np.asarray(matrix, dtype=np.float64) - mins) / np.where(constant, 1.0, span)
    scaled = np.clip(scaled, 0.0, 1.0)
    scaled[:, constant] = 0.0
    return scaled


def _as_number(value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


@dataclass
class StaticEncoder:
    """Static features to a fixed-length vector.

    Numeric features are median-imputed and standardized; categorical ones are
    mode-imputed (ties go to the smallest category) and one-hot encoded.
    A feature is numeric when every observed training value parses as a number.
    """

    numeric: Dict[str, Dict[str, float]] = field(default_factory=dict)
    categorical: Dict[str, Dict] = field(default_factory=dict)

    @property
    def names(self) -> List[str]:
        """Output column names, numeric features first."""
        columns = list(self.numeric)
        for name, spec in self.categorical.items():
            columns.extend(f"{name}={category}" for category in spec["categories"])
        return columns

    @property
    def dim(self) -> int:
        return len(self.names)

    def fit(self, rows: Sequence[Dict[str, Optional[str]]]) -> "StaticEncoder":
        if not rows:
            raise InputValidationError("Cannot fit static features on no rows")
        frame = pd.DataFrame(list(rows))
        frame = frame.reindex(columns=sorted(frame.columns))

        self.numeric, self.categorical = {}, {}
        for name in frame.columns:
            observed = [v for v in frame[name].tolist() if v is not None and not pd.isna(v)]
            numbers = [_as_number(v) for v in observed]
            if observed and all(n is not None for n in numbers):
                values = np.array(numbers, dtype=np.float64)
                median = float(np.median(values))
                # Scale statistics describe the imputed column that transform sees
                filled = np.concatenate([values, np.full(len(frame) - len(observed), median)])
                mean, std = fit_standard(filled)
                self.numeric[name] = {"median": median, "mean": mean, "std": std}
            elif not observed:
                # Degenerate median 0, so the feature standardizes to 0
                self.numeric[name] = {"median": 0.0, "mean": 0.0, "std": 0.0}
            else:
                counts = pd.Series([str(v) for v in observed]).value_counts()
                top = counts.max()
                mode = sorted(counts[counts == top].index)[0]
                categories = sorted(set(counts.index))
                self.categorical[name] = {"mode": mode, "categories": categories}
        return self

    def transform(self, row: Dict[str, Optional[str]]) -> np.ndarray:
        vector = []
        for name, stats in self.numeric.items():
            number = _as_number(row.get(name))
            if number is None or np.isnan(number):
                number = stats["median"]
            std = stats["std"]
            vector.append(0.0 if std == 0.0 else (number - stats["mean"]) / std)
        for name, spec in self.categorical.items():
            value = row.get(name)
            value = spec["mode"] if value is None or pd.isna(value) else str(value)
            vector.extend(1.0 if value == category else 0.0 for category in spec["categories"])
        return np.array(vector, dtype=np.float64)

    def to_dict(self) -> Dict:
        return {"numeric": self.numeric, "categorical": self.categorical}

    @classmethod
    def from_dict(cls, data: Dict) -> "StaticEncoder":
        return cls(numeric=dict(data["numeric"]), categorical=dict(data["categorical"]))
