"""Cross-validated, bootstrapped evaluation of the transformer and the baselines."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core.config import TOOL_VERSION
from src.core.exceptions import InputValidationError, UndefinedMetricError
from src.core.logger import get_logger
from src.data_collection.pipeline import PRIMARY_FOLD, LoadedBundle
from src.data_collection.preprocessor import ShiftPreprocessor
from src.models.acuity.baseline_model import LogisticBaselineModel
from src.models.acuity.training import AcuityTransformer
from src.models.domain.acuity import CLASS_NAMES, AcuityLabel
from src.models.domain.encounter import ShiftRecord
from src.schemas.configs import EvaluationConfig, ModelConfig, TrainingConfig
from src.schemas.reports import EvaluationReport, FoldSummary, MetricEstimate
from src.services.evaluation.bootstrap import bootstrap_values, summarize
from src.services.evaluation.metrics import (
    METRIC_NAMES,
    metric_value,
    one_vs_rest,
    recall_confusion,
    report_classes,
    roc_auc,
    select_threshold,
)

logger = get_logger(__name__)

MEAN = "mean"
MEAN_STREAM = 99
DEFAULT_THRESHOLD = 0.5


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def binary_records(records: Sequence[ShiftRecord]) -> List[ShiftRecord]:
    return [r for r in records if r.binary_delirium_label is not None]


@dataclass
class FoldPredictions:
    validation: np.ndarray
    test: np.ndarray
    details: Dict[str, Any] = field(default_factory=dict)


class TransformerEstimator:
    """Re-fits preprocessing and the transformer on every fold."""

    name = "transformer"

    def __init__(
        self,
        model_config: ModelConfig,
        training_config: TrainingConfig,
        seed: int,
        progress: bool = False,
    ):
        self.model_config = model_config
        self.training_config = training_config
        self.seed = seed
        self.progress = progress

    @property
    def class_count(self) -> int:
        return self.model_config.class_count

    def fit_predict(
        self,
        bundle: LoadedBundle,
        fold: int,
        train: Sequence[ShiftRecord],
        validation: Sequence[ShiftRecord],
        test: Sequence[ShiftRecord],
    ) -> FoldPredictions:
        preprocessor = bundle.fit_preprocessor(train)
        model = AcuityTransformer(
            self.model_config, self.training_config, fold_seed(self.seed, fold), self.progress
        ).fit(
            preprocessor.encode_all(train),
            preprocessor.encode_all(validation),
            preprocessor.vocabulary,
        )
        best = [r for r in model.history if r.improved]
        return FoldPredictions(
            validation=model.predict_proba(preprocessor.encode_all(validation)),
            test=model.predict_proba(preprocessor.encode_all(test)),
            details={
                "epochs": len(model.history),
                "best_epoch": best[-1].epoch if best else None,
                "retained_variables": preprocessor.vocabulary.size,
            },
        )


class LogisticEstimator:
    """Logistic regression on the fold's tabular matrices."""

    name = "logistic"

    def __init__(self, class_count: int, seed: int, class_weighting: bool = True):
        self.class_count = class_count
        self.seed = seed
        self.class_weighting = class_weighting

    def fit_predict(
        self,
        bundle: LoadedBundle,
        fold: int,
        train: Sequence[ShiftRecord],
        validation: Sequence[ShiftRecord],
        test: Sequence[ShiftRecord],
    ) -> FoldPredictions:
        preprocessor = bundle.fit_preprocessor(train)
        model = LogisticBaselineModel(
            self.class_count, self.class_weighting, fold_seed(self.seed, fold)
        )
        binary = self.class_count == 1
        training_metrics = model.train(
            preprocessor.tabular(train),
            _targets(train, binary),
            preprocessor.tabular_columns,
        )
        return FoldPredictions(
            validation=model.predict_proba(preprocessor.tabular(validation)),
            test=model.predict_proba(preprocessor.tabular(test)),
            details={"train_" + key: round(value, 6) for key, value in training_metrics.items()},
        )


class CheckpointEstimator:
    """A trained checkpoint scored as-is; there is nothing to fit per fold."""

    name = "checkpoint"

    def __init__(self, model: AcuityTransformer, preprocessor: ShiftPreprocessor):
        self.model = model
        self.preprocessor = preprocessor

    @property
    def class_count(self) -> int:
        return self.model.model_config.class_count

    def fit_predict(self, bundle, fold, train, validation, test) -> FoldPredictions:
        return FoldPredictions(
            validation=self.model.predict_proba(self.preprocessor.encode_all(validation)),
            test=self.model.predict_proba(self.preprocessor.encode_all(test)),
            details={"epochs": len(self.model.history)},
        )


def _targets(records: Sequence[ShiftRecord], binary: bool) -> np.ndarray:
    if binary:
        return np.array([int(r.binary_delirium_label) for r in records], dtype=np.int64)
    return np.array([r.label.class_index for r in records], dtype=np.int64)


@dataclass
class FoldResult:
    fold: int
    train_size: int
    validation_size: int
    validation: np.ndarray
    test: np.ndarray
    thresholds: Dict[AcuityLabel, float]
    default_thresholds: List[AcuityLabel]
    details: Dict[str, Any]


@dataclass
class CrossValidationResult:
    report: EvaluationReport
    predictions: pd.DataFrame
    test_targets: np.ndarray
    test_probabilities: np.ndarray
    classes: List[AcuityLabel]


class CrossValidator:
    """Runs the evaluation protocol on a prepared bundle.

    Each fold trains on the other folds, picks per-class thresholds on its
    validation fold by Youden's J and scores the shared test set. Every
    class x metric gets ``iterations`` bootstrap values per fold; the point
    estimate and percentile interval are taken over all of them together.
    """

    def __init__(
        self,
        bundle: LoadedBundle,
        estimator,
        config: EvaluationConfig,
        seed: int,
        threads: int = 1,
        config_hash: str = "",
    ):
        self.bundle = bundle
        self.estimator = estimator
        self.config = config
        self.seed = seed
        self.threads = threads
        self.config_hash = config_hash
        self.binary = estimator.class_count == 1
        self.classes = report_classes(estimator.class_count, config.include_normal_in_mean)

    def _records(self, records: Sequence[ShiftRecord]) -> List[ShiftRecord]:
        return binary_records(records) if self.binary else list(records)

    def folds(self) -> List[int]:
        if isinstance(self.estimator, CheckpointEstimator):
            return [PRIMARY_FOLD]
        count = self.bundle.split.fold_count
        requested = self.config.folds or count
        if requested > count:
            raise InputValidationError(
                f"{requested} folds requested but the bundle has {count}"
            )
        return list(range(requested))

    def _run_fold(self, fold: int, test: List[ShiftRecord]) -> FoldResult:
        train, validation = self.bundle.split.fold_records(fold)
        train, validation = self._records(train), self._records(validation)
        if not train or not validation:
            raise InputValidationError(f"Fold {fold} has an empty train or validation set")
        predictions = self.estimator.fit_predict(self.bundle, fold, train, validation, test)

        views = one_vs_rest(predictions.validation, _targets(validation, self.binary), self.classes)
        thresholds, defaults = {}, []
        for label, (scores, labels) in views.items():
            try:
                thresholds[label] = select_threshold(scores, labels)
            except UndefinedMetricError:
                thresholds[label] = DEFAULT_THRESHOLD
                defaults.append(label)
        logger.info("fold_evaluated", fold=fold, train=len(train), validation=len(validation), **predictions.details)
        return FoldResult(
            fold, len(train), len(validation), predictions.validation, predictions.test,
            thresholds, defaults, predictions.details,
        )

    def run(self) -> CrossValidationResult:
        test = self._records(self.bundle.split.test)
        if not test:
            raise InputValidationError("The bundle has no test shifts to evaluate")
        folds = self.folds()
        results: List[FoldResult] = Parallel(n_jobs=self.threads, backend="threading")(
            delayed(self._run_fold)(fold, test) for fold in folds
        )

        targets = _targets(test, self.binary)
        groups = (
            np.array([r.patient_id for r in test], dtype=object)
            if self.config.patient_level_bootstrap
            else None
        )
        metrics, undefined = self._bootstrap(results, targets, groups)

        confusion, confusion_classes = None, None
        pooled_targets = np.concatenate([targets for _ in results])
        pooled = np.vstack([result.test for result in results])
        if not self.binary:
            matrix = recall_confusion(pooled_targets, pooled.argmax(axis=1))
            confusion = [[None if np.isnan(x) else float(x) for x in row] for row in matrix]
            confusion_classes = list(CLASS_NAMES)

        report = EvaluationReport(
            task=self.bundle.task,
            model=self.estimator.name,
            head="binary_delirium" if self.binary else "four_class",
            config_hash=self.config_hash,
            seed=self.seed,
            tool_version=TOOL_VERSION,
            vocabulary_hash=self.bundle.vocabulary_hash,
            classes=[label.value for label in self.classes],
            bootstrap_iterations=self.config.bootstrap_iterations,
            ci_level=self.config.ci_level,
            patient_level_bootstrap=self.config.patient_level_bootstrap,
            folds=[self._fold_summary(result, targets, len(test)) for result in results],
            metrics=metrics,
            confusion=confusion,
            confusion_classes=confusion_classes,
            undefined=undefined,
        )
        return CrossValidationResult(
            report=report,
            predictions=self._predictions_frame(results, test, targets),
            test_targets=pooled_targets,
            test_probabilities=pooled,
            classes=self.classes,
        )

    def _fold_summary(self, result: FoldResult, targets: np.ndarray, test_size: int) -> FoldSummary:
        aurocs: Dict[str, Optional[float]] = {}
        for label, (scores, labels) in one_vs_rest(result.test, targets, self.classes).items():
            try:
                aurocs[label.value] = round(roc_auc(scores, labels), 12)
            except UndefinedMetricError:
                aurocs[label.value] = None
        defined = [value for value in aurocs.values() if value is not None]
        return FoldSummary(
            fold=result.fold,
            train_shifts=result.train_size,
            validation_shifts=result.validation_size,
            test_shifts=test_size,
            thresholds={label.value: value for label, value in result.thresholds.items()},
            default_thresholds=[label.value for label in result.default_thresholds],
            test_auroc=aurocs,
            mean_test_auroc=float(np.mean(defined)) if defined else None,
            details=result.details,
        )

    def _bootstrap(
        self, results: List[FoldResult], targets: np.ndarray, groups: Optional[np.ndarray]
    ) -> Tuple[Dict[str, Dict[str, Optional[MetricEstimate]]], List[str]]:
        config = self.config
        metrics: Dict[str, Dict[str, Optional[MetricEstimate]]] = {}
        undefined: List[str] = []
        size = len(targets)
        mean_members: List[AcuityLabel] = []

        for class_slot, label in enumerate(self.classes):
            metrics[label.value] = {}
            present = len(np.unique(one_vs_rest(results[0].test, targets, [label])[label][1])) == 2
            if present:
                mean_members.append(label)
            else:
                undefined.append(f"{label.value}/mean_member")
            for metric_slot, name in enumerate(METRIC_NAMES):
                values: List[float] = []
                try:
                    for result in results:
                        scores, labels = one_vs_rest(result.test, targets, [label])[label]
                        threshold = result.thresholds[label]

                        def value(indices, scores=scores, labels=labels, threshold=threshold):
                            return metric_value(name, scores[indices], labels[indices], threshold)

                        values += bootstrap_values(
                            value, size, config.bootstrap_iterations,
                            [self.seed, result.fold, class_slot, metric_slot],
                            groups, config.max_redraws,
                        )
                except UndefinedMetricError:
                    metrics[label.value][name] = None
                    undefined.append(f"{label.value}/{name}")
                    continue
                metrics[label.value][name] = _estimate(values, config.ci_level)

        metrics[MEAN] = {}
        for metric_slot, name in enumerate(METRIC_NAMES):
            if not mean_members:
                metrics[MEAN][name] = None
                undefined.append(f"{MEAN}/{name}")
                continue
            values = []
            try:
                for result in results:
                    views = one_vs_rest(result.test, targets, mean_members)

                    def value(indices, views=views, result=result):
                        return float(np.mean([
                            metric_value(name, scores[indices], labels[indices], result.thresholds[label])
                            for label, (scores, labels) in views.items()
                        ]))

                    values += bootstrap_values(
                        value, size, config.bootstrap_iterations,
                        [self.seed, result.fold, MEAN_STREAM, metric_slot],
                        groups, config.max_redraws,
                    )
            except UndefinedMetricError:
                metrics[MEAN][name] = None
                undefined.append(f"{MEAN}/{name}")
                continue
            metrics[MEAN][name] = _estimate(values, config.ci_level)
        return metrics, undefined

    def _predictions_frame(
        self, results: List[FoldResult], test: List[ShiftRecord], targets: np.ndarray
    ) -> pd.DataFrame:
        columns = ["p_Delirium"] if self.binary else [f"p_{name}" for name in CLASS_NAMES]
        frames = []
        for result in results:
            frame = pd.DataFrame(
                {
                    "fold": result.fold,
                    "patient_id": [r.patient_id for r in test],
                    "stay_id": [r.stay_id for r in test],
                    "shift_index": [r.shift_index for r in test],
                    "label": [r.label.value for r in test],
                    "target": targets,
                }
            )
            probabilities = pd.DataFrame(result.test, columns=columns)
            frames.append(pd.concat([frame, probabilities], axis=1))
        return pd.concat(frames, ignore_index=True)


def _estimate(values: List[float], level: float) -> MetricEstimate:
    summary = summarize(values, level)
    return MetricEstimate(
        point=summary.point,
        ci_low=summary.ci_low,
        ci_high=summary.ci_high,
        repetitions=len(values),
    )


def run_cv(
    bundle: LoadedBundle,
    estimator,
    config: EvaluationConfig,
    seed: int,
    threads: int = 1,
    config_hash: str = "",
) -> CrossValidationResult:
    """Evaluate ``estimator`` on ``bundle``; see :class:`CrossValidator`."""
    return CrossValidator(bundle, estimator, config, seed, threads, config_hash).run()
