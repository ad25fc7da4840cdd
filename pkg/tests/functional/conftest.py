"""Functional fixtures: a small run configuration and a CLI runner."""

import pytest
from click.testing import CliRunner

SMALL_RUN = """
[synth]
patients = 40
los_median_days = 3.0
events_per_hour = 0.5

[model]
d_model = 8
layers = 1
heads = 2
ffn_dim = 16
static_dim = 4
dropout = 0.0

[training]
max_epochs = 2
patience = 1
batch_size = 32

[evaluation]
folds = 2
bootstrap_iterations = 3
"""


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def run_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "run.toml"
    path.write_text(SMALL_RUN, encoding="utf-8")
    return path
