"""Fixtures for the model tests."""

import numpy as np
import pytest

from src.models.acuity.encoding import batch_shifts
from src.models.acuity.network import AcuityNetwork, init_params
from src.models.domain.acuity import CLASS_ORDER
from src.models.domain.encounter import EncodedWindow
from src.schemas.configs import ModelConfig
from tests.factories import EncodedShiftFactory

VOCABULARY_SIZE = 3
STATIC_SIZE = 3


def make_shifts(count=8, seed=0):
    """Shifts with random windows of varied length, including an empty one."""
    rng = np.random.default_rng(seed)
    shifts = []
    for i in range(count):
        size = 0 if i == count - 1 else int(rng.integers(1, 7))
        label = CLASS_ORDER[i % 4]
        window = EncodedWindow(
            t=np.sort(rng.uniform(0.01, 1.0, size)),
            f=rng.integers(0, VOCABULARY_SIZE, size),
            v=rng.normal(size=size),
        )
        shifts.append(
            EncodedShiftFactory(
                window=window,
                static_vector=rng.normal(size=STATIC_SIZE),
                label=label,
                binary_delirium_label=bool(i % 2),
            )
        )
    return shifts


def tiny_network(config: ModelConfig, seed: int = 0) -> AcuityNetwork:
    return AcuityNetwork(config, init_params(config, VOCABULARY_SIZE, STATIC_SIZE, seed))


@pytest.fixture
def shifts():
    return make_shifts()


@pytest.fixture
def batch(shifts):
    return batch_shifts(shifts, STATIC_SIZE)
