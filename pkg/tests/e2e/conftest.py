"""End-to-end fixtures: prepared synthetic cohorts held in memory."""

from pathlib import Path
from typing import Optional

from src.data_collection.generators import generate
from src.data_collection.pipeline import CohortPipeline, LoadedBundle
from src.core.manifest import RunManifest
from src.schemas.configs import PrepareConfig, SynthConfig


def prepared_bundle(
    tmp_dir: Path,
    signal: float,
    patients: int = 300,
    seed: int = 0,
    los_median_days: Optional[float] = 3.0,
) -> LoadedBundle:
    """Generate, write and prepare a cohort; return it as an in-memory bundle.

    ``los_median_days=None`` keeps the synthetic default stay length.
    """
    shape = {} if los_median_days is None else {"los_median_days": los_median_days}
    config = SynthConfig(patients=patients, signal_strength=signal, **shape)
    cohort = generate(config, seed)
    paths = cohort.write(tmp_dir)
    manifest = RunManifest(command="synth", config_hash="", seed=seed)
    manifest.record_outputs(paths)
    manifest.extra = {"catalog": [spec.to_dict() for spec in cohort.catalog]}
    manifest.write(tmp_dir)

    prepared = CohortPipeline(PrepareConfig(), seed).prepare(tmp_dir)
    return LoadedBundle(
        directory=tmp_dir,
        split=prepared.split,
        catalog=prepared.catalog,
        task=prepared.task,
        seed=seed,
        vocabulary_hash=prepared.preprocessor.vocabulary.hash,
        preprocessor_state=prepared.preprocessor.to_state(),
        manifest={},
    )
