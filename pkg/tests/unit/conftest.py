"""Unit test configuration and fixtures."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    """A fixed random stream for tests that need noise."""
    return np.random.default_rng(1234)
