"""Mini-batch training with early stopping, and the fitted-model wrapper."""

import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from src.core.config import DEFAULT_SEED, TOOL_VERSION
from src.core.exceptions import (
    InputValidationError,
    TrainingDivergedError,
    VocabularyMismatchError,
)
from src.core.logger import get_logger
from src.models.acuity.checkpoint import load_checkpoint, save_checkpoint
from src.models.acuity.encoding import batch_shifts
from src.models.acuity.network import AcuityNetwork, init_params
from src.models.acuity.optimizer import AdamOptimizer
from src.models.domain.acuity import PredictionOutput
from src.models.domain.encounter import EncodedShift, FeatureVocabulary
from src.schemas.configs import ModelConfig, TrainingConfig
from src.services.evaluation.metrics import mean_auroc, one_vs_rest, report_classes

logger = get_logger(__name__)


def shift_targets(shifts: Sequence[EncodedShift], binary: bool) -> np.ndarray:
    """Class indices, or 0/1 delirium flags for the binary head."""
    if binary:
        missing = [(s.stay_id, s.shift_index) for s in shifts if s.binary_delirium_label is None]
        if missing:
            raise InputValidationError(
                f"{len(missing)} shifts have no CAM-based delirium label, first {missing[0]}"
            )
        return np.array([int(s.binary_delirium_label) for s in shifts], dtype=np.int64)
    return np.array([s.label.class_index for s in shifts], dtype=np.int64)


def class_weights(
    targets: np.ndarray, class_count: int, cap: float = 10.0, enabled: bool = True
) -> np.ndarray:
    """Inverse prevalence relative to the most frequent class, capped at ``cap``.

    Classes absent from ``targets`` get weight 1.
    """
    size = max(class_count, 2)
    if not enabled or len(targets) == 0:
        return np.ones(size)
    counts = np.bincount(targets, minlength=size).astype(np.float64)
    weights = np.ones(size)
    present = counts > 0
    weights[present] = np.minimum(counts.max() / counts[present], cap)
    return weights


def length_batches(
    lengths: Sequence[int], batch_size: int, rng: np.random.Generator
) -> List[np.ndarray]:
    """Index batches of similar window length, in a seeded random order."""
    order = np.lexsort((np.arange(len(lengths)), np.asarray(lengths)))
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    validation_loss: float
    validation_auroc: Optional[float]
    improved: bool


class Trainer:
    """Fits an :class:`AcuityNetwork`, keeping the best-validation parameters."""

    def __init__(self, network: AcuityNetwork, config: TrainingConfig, seed: int, progress: bool = True):
        self.network = network
        self.config = config
        self.seed = seed
        self.progress = progress
        self.history: List[EpochRecord] = []

    def _predict(self, shifts: Sequence[EncodedShift]) -> np.ndarray:
        return predict_proba(self.network, shifts, self.config.batch_size)

    def _validate(self, shifts: Sequence[EncodedShift], targets: np.ndarray, weights: np.ndarray) -> tuple:
        probs = self._predict(shifts)
        loss = self.network.loss(probs, targets, weights[targets])
        classes = report_classes(probs.shape[1])
        auroc, _ = mean_auroc(one_vs_rest(probs, targets, classes))
        return loss, auroc

    def fit(self, train: Sequence[EncodedShift], validation: Sequence[EncodedShift]) -> List[EpochRecord]:
        """Train until ``max_epochs`` or ``patience`` epochs without improvement.

        Improvement means a higher validation mean AUROC, or an equal one with
        a lower validation loss.

        Raises:
            InputValidationError: If either set is empty.
            TrainingDivergedError: On a non-finite loss or activation.
        """
        if not train or not validation:
            raise InputValidationError("Training needs non-empty train and validation sets")
        config, network = self.config, self.network
        binary = network.binary
        train_targets = shift_targets(train, binary)
        validation_targets = shift_targets(validation, binary)
        weights = class_weights(
            train_targets, network.config.class_count, config.class_weight_cap, config.class_weighting
        )
        static_dim = train[0].static_vector.shape[0]
        rng = np.random.default_rng(self.seed)
        optimizer = AdamOptimizer(
            network.params,
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            grad_clip=config.grad_clip,
        )

        best_score = (-np.inf, -np.inf)
        best_params = {name: value.copy() for name, value in network.params.items()}
        stale = 0
        lengths = [len(shift.window) for shift in train]
        epochs = tqdm(
            range(1, config.max_epochs + 1),
            desc="epochs",
            leave=False,
            disable=not (self.progress and sys.stderr.isatty()),
        )
        for epoch in epochs:
            losses, sizes = [], []
            for indices in length_batches(lengths, config.batch_size, rng):
                shifts = [train[i] for i in indices]
                batch = batch_shifts(shifts, static_dim)
                try:
                    probs, cache = network.forward(batch, rng=rng)
                except TrainingDivergedError as exc:
                    raise TrainingDivergedError(
                        "Non-finite activation during training", layer=exc.layer, epoch=epoch
                    ) from exc
                targets = train_targets[indices]
                loss = network.loss(probs, targets, weights[targets])
                if not np.isfinite(loss):
                    raise TrainingDivergedError("Non-finite training loss", epoch=epoch)
                optimizer.step(network.backward(cache, targets, weights[targets]))
                losses.append(loss)
                sizes.append(len(indices))

            train_loss = float(np.average(losses, weights=sizes))
            try:
                validation_loss, auroc = self._validate(validation, validation_targets, weights)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(
                    "Non-finite activation during validation", layer=exc.layer, epoch=epoch
                ) from exc
            score = (-np.inf if auroc is None else auroc, -validation_loss)
            improved = score > best_score
            if improved:
                best_score = score
                best_params = {name: value.copy() for name, value in network.params.items()}
                stale = 0
            else:
                stale += 1
            self.history.append(EpochRecord(epoch, train_loss, validation_loss, auroc, improved))
            logger.debug(
                "epoch_completed",
                epoch=epoch,
                train_loss=round(train_loss, 6),
                validation_loss=round(validation_loss, 6),
                validation_auroc=None if auroc is None else round(auroc, 6),
            )
            if stale >= config.patience:
                break

        for name, value in best_params.items():
            network.params[name][...] = value
        return self.history


def predict_proba(
    network: AcuityNetwork, shifts: Sequence[EncodedShift], batch_size: int = 256
) -> np.ndarray:
    """Probabilities in input order, computed in fixed-size chunks."""
    class_count = network.config.class_count
    if not shifts:
        return np.zeros((0, class_count))
    static_dim = network.params["static.W"].shape[0]
    chunks = [
        network.predict_proba(batch_shifts(shifts[i : i + batch_size], static_dim))
        for i in range(0, len(shifts), batch_size)
    ]
    return np.vstack(chunks)


class AcuityTransformer:
    """Fit/predict/save wrapper around :class:`AcuityNetwork`."""

    def __init__(
        self,
        model_config: ModelConfig = ModelConfig(),
        training_config: TrainingConfig = TrainingConfig(),
        seed: int = DEFAULT_SEED,
        progress: bool = True,
    ):
        self.model_config = model_config
        self.training_config = training_config
        self.seed = seed
        self.progress = progress
        self.network: Optional[AcuityNetwork] = None
        self.vocabulary: Optional[FeatureVocabulary] = None
        self.history: List[EpochRecord] = []
        self.meta: Dict[str, Any] = {}

    @property
    def vocabulary_hash(self) -> Optional[str]:
        return None if self.vocabulary is None else self.vocabulary.hash

    def fit(
        self,
        train: Sequence[EncodedShift],
        validation: Sequence[EncodedShift],
        vocabulary: FeatureVocabulary,
    ) -> "AcuityTransformer":
        if not train:
            raise InputValidationError("Cannot fit on an empty training set")
        self.vocabulary = vocabulary
        self._check_vocabulary(list(train) + list(validation))
        static_size = train[0].static_vector.shape[0]
        params = init_params(self.model_config, vocabulary.size, static_size, self.seed)
        self.network = AcuityNetwork(self.model_config, params)
        trainer = Trainer(self.network, self.training_config, self.seed, self.progress)
        self.history = trainer.fit(train, validation)
        best = max((r for r in self.history if r.improved), key=lambda r: r.epoch, default=None)
        logger.info(
            "model_trained",
            epochs=len(self.history),
            best_epoch=None if best is None else best.epoch,
            best_validation_auroc=None if best is None else best.validation_auroc,
        )
        return self

    def _require_network(self) -> AcuityNetwork:
        if self.network is None:
            raise InputValidationError("Model used before fit or load")
        return self.network

    def _check_vocabulary(self, shifts: Sequence[EncodedShift]) -> None:
        expected = self.vocabulary_hash
        for shift in shifts:
            if shift.vocabulary_hash != expected:
                raise VocabularyMismatchError(
                    f"Shift {shift.stay_id}/{shift.shift_index} was encoded with vocabulary "
                    f"{shift.vocabulary_hash}, the model uses {expected}"
                )

    def predict_proba(self, shifts: Sequence[EncodedShift]) -> np.ndarray:
        network = self._require_network()
        self._check_vocabulary(shifts)
        return predict_proba(network, shifts, self.training_config.batch_size)

    def predict_batch(self, shifts: Sequence[EncodedShift]) -> List[PredictionOutput]:
        """One prediction per shift, in input order."""
        return [PredictionOutput.from_probabilities(row) for row in self.predict_proba(shifts)]

    def save(self, path: Path, extra: Optional[Dict[str, Any]] = None) -> Path:
        network = self._require_network()
        meta = {
            "tool_version": TOOL_VERSION,
            "model": self.model_config.model_dump(mode="json"),
            "training": self.training_config.model_dump(mode="json"),
            "seed": self.seed,
            "vocabulary_hash": self.vocabulary_hash,
            "vocabulary": self.vocabulary.to_list(),
            "history": [asdict(record) for record in self.history],
            **(extra or {}),
        }
        return save_checkpoint(path, network.params, meta)

    @classmethod
    def load(
        cls, path: Path, expected_vocabulary_hash: Optional[str] = None
    ) -> "AcuityTransformer":
        params, meta = load_checkpoint(path, expected_vocabulary_hash)
        model = cls(
            ModelConfig.model_validate(meta["model"]),
            TrainingConfig.model_validate(meta["training"]),
            seed=int(meta["seed"]),
        )
        model.vocabulary = FeatureVocabulary.from_list(meta["vocabulary"])
        model.network = AcuityNetwork(model.model_config, params)
        model.history = [EpochRecord(**record) for record in meta.get("history", [])]
        model.meta = meta
        return model
