"""Integration fixtures: a synthetic raw cohort written to disk."""

import pytest

from src.core.manifest import RunManifest
from src.data_collection.generators import generate
from src.schemas.configs import SynthConfig

SYNTH = SynthConfig(patients=50, los_median_days=3.0, events_per_hour=0.5)


def write_raw_cohort(out_dir, config=SYNTH, seed=3):
    """Generate a cohort and write it the way the synth command does."""
    cohort = generate(config, seed)
    paths = cohort.write(out_dir)
    manifest = RunManifest(command="synth", config_hash="", seed=seed)
    manifest.record_outputs(paths)
    manifest.extra = {"catalog": [spec.to_dict() for spec in cohort.catalog]}
    manifest.write(out_dir)
    return cohort


@pytest.fixture(scope="module")
def raw_cohort(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("raw")
    return out_dir, write_raw_cohort(out_dir)
