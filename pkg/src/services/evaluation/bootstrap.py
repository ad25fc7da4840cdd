"""Seeded bootstrap resampling and percentile confidence intervals."""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.core.exceptions import ConfigError, UndefinedMetricError

DEFAULT_MAX_REDRAWS = 100

MetricFn = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Estimate:
    point: float
    ci_low: float
    ci_high: float


def resample_indices(
    rng: np.random.Generator, size: int, groups: Optional[np.ndarray] = None
) -> np.ndarray:
    """Row indices of one resample, drawn by row or by whole group (patient)."""
    if groups is None:
        return rng.integers(0, size, size=size)
    unique, inverse = np.unique(groups, return_inverse=True)
    members = [np.nonzero(inverse == g)[0] for g in range(len(unique))]
    picked = rng.integers(0, len(unique), size=len(unique))
    return np.concatenate([members[g] for g in picked])


def bootstrap_values(
    metric: MetricFn,
    size: int,
    iterations: int,
    seed: Sequence[int],
    groups: Optional[np.ndarray] = None,
    max_redraws: int = DEFAULT_MAX_REDRAWS,
) -> List[float]:
    """Metric values on ``iterations`` resamples of ``size`` rows.

    ``metric`` receives the resampled row indices. A resample on which the
    metric is undefined is redrawn, at most ``max_redraws`` times in a row.

    Raises:
        ConfigError: If ``iterations`` is below 1.
        UndefinedMetricError: When redraws run out.
    """
    if iterations < 1:
        raise ConfigError(f"bootstrap iterations must be at least 1, got {iterations}")
    if size == 0:
        raise UndefinedMetricError("Cannot bootstrap an empty sample")
    rng = np.random.default_rng(list(seed))
    values = []
    for _ in range(iterations):
        for _attempt in range(max_redraws + 1):
            try:
                values.append(float(metric(resample_indices(rng, size, groups))))
                break
            except UndefinedMetricError:
                continue
        else:
            raise UndefinedMetricError(
                f"Metric undefined on {max_redraws} consecutive resamples"
            )
    return values


def summarize(values: Sequence[float], level: float = 0.95) -> Estimate:
    """Mean of all repetition values with its percentile interval.

    When the values are so skewed that the mean falls outside the percentile
    interval, the violated bound is moved to the mean. The reported interval is
    then the percentile interval widened just enough to contain the point.
    """
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        raise UndefinedMetricError("No bootstrap values to summarize")
    tail = (1.0 - level) / 2.0 * 100.0
    point = float(values.mean())
    low, high = np.percentile(values, [tail, 100.0 - tail])
    return Estimate(point=point, ci_low=min(float(low), point), ci_high=max(float(high), point))


def bootstrap_ci(
    metric: MetricFn,
    size: int,
    iterations: int = 10,
    level: float = 0.95,
    seed: Sequence[int] = (0,),
    groups: Optional[np.ndarray] = None,
    max_redraws: int = DEFAULT_MAX_REDRAWS,
) -> Estimate:
    """Point estimate and CI of ``metric`` over resamples of one sample."""
    return summarize(
        bootstrap_values(metric, size, iterations, seed, groups, max_redraws), level
    )
