"""Shared test fixtures."""

import pytest

from src.schemas.configs import ModelConfig, TrainingConfig


@pytest.fixture
def temp_dir(tmp_path):
    """Create a temporary directory for test files."""
    return tmp_path


@pytest.fixture
def tiny_model_config():
    return ModelConfig(d_model=8, layers=1, heads=2, ffn_dim=16, static_dim=4, dropout=0.0)


@pytest.fixture
def quick_training_config():
    return TrainingConfig(max_epochs=2, patience=1, batch_size=32)
