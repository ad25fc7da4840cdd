"""Command-line interface for the brain acuity toolkit."""

import functools
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd

from src.core.config import DEFAULT_SEED, DEFAULT_THREADS, TOOL_NAME, TOOL_VERSION
from src.core.exceptions import EXIT_RUNTIME, AcuityError, ConfigError
from src.core.logger import logger, set_level
from src.core.manifest import RunManifest
from src.schemas.configs import RunConfig, config_hash, load_run_config, with_overrides

TASKS = ["brain_acuity", "delirium"]
HEADS = {"four_class": "four_class", "binary": "binary_delirium"}
CHECKPOINT_FILE = "model.npz"
HISTORY_FILE = "history.csv"
CONFUSION_FILE = "confusion.csv"
SUMMARY_FILE = "summary.csv"


@dataclass
class Settings:
    """Global flags shared by every subcommand."""

    config_path: Optional[Path] = None
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS
    quiet: bool = False
    _run_config: Optional[RunConfig] = field(default=None, repr=False)

    @property
    def run_config(self) -> RunConfig:
        if self._run_config is None:
            self._run_config = load_run_config(self.config_path)
        return self._run_config

    @property
    def progress(self) -> bool:
        return not self.quiet


def guarded(command):
    """Map package errors to their exit codes and log the failure."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        name = command.__name__.removeprefix("cmd_")
        try:
            return command(*args, **kwargs)
        except AcuityError as exc:
            logger.error("command_failed", command=name, error=str(exc), exit_code=exc.exit_code)
            click.echo(f"Error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as exc:
            logger.exception("command_crashed", command=name)
            click.echo(f"Error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def out_option(command):
    return click.option(
        "--out",
        "out_dir",
        required=True,
        type=click.Path(file_okay=False, path_type=Path),
        help="Directory every output of the command is written into.",
    )(command)


def bundle_option(command):
    return click.option(
        "--bundle",
        "bundle_dir",
        required=True,
        type=click.Path(file_okay=False, path_type=Path),
        help="Dataset bundle written by 'prepare'.",
    )(command)


@click.group()
@click.version_option(TOOL_VERSION, prog_name=TOOL_NAME)
@click.option("--seed", type=int, default=None, help="Master seed (default: ACUITY_SEED or 42).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads.")
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="TOML run configuration.",
)
@click.option("--quiet", is_flag=True, help="Only log warnings and hide progress bars.")
@click.pass_context
def cli(ctx, seed, threads, config_path, quiet):
    """Brain acuity prediction from irregular ICU time series."""
    if quiet:
        set_level("WARNING")
    ctx.obj = Settings(
        config_path=config_path,
        seed=DEFAULT_SEED if seed is None else seed,
        threads=DEFAULT_THREADS if threads is None else threads,
        quiet=quiet,
    )


@cli.command("synth")
@out_option
@click.option("--patients", type=click.IntRange(min=1), default=None)
@click.option("--preset", type=click.Choice(TASKS), default=None)
@click.option("--signal", "signal_strength", type=click.FloatRange(0.0, 1.0), default=None)
@click.pass_obj
@guarded
def cmd_synth(settings: Settings, out_dir: Path, patients, preset, signal_strength):
    """Generate a synthetic raw cohort with ground-truth labels."""
    from src.data_collection.generators import describe, generate

    config = with_overrides(
        settings.run_config.synth,
        patients=patients,
        preset=preset,
        signal_strength=signal_strength,
    )
    seed = settings.seed if config.seed is None else config.seed
    manifest = RunManifest(command="synth", config_hash=config_hash(config), seed=seed)

    cohort = generate(config, seed, settings.threads)
    manifest.mark("generate")
    summary = describe(cohort)
    paths = cohort.write(out_dir)

    manifest.record_outputs(paths)
    manifest.funnel = dict(sorted(cohort.funnel.items()))
    manifest.extra = {
        "catalog": [spec.to_dict() for spec in cohort.catalog],
        "preset": config.preset,
        "rates": list(config.rates),
        "signal_strength": config.signal_strength,
    }
    manifest.write(out_dir)

    counts = summary[summary["section"] == "class_count"]
    click.echo(
        f"{config.patients} patients, {len(cohort.labels)} labeled shifts: "
        + ", ".join(f"{row.name}={int(row.value)}" for row in counts.itertuples(index=False))
    )


@cli.command("label")
@click.option(
    "--scores",
    "scores_path",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV of patient_id, stay_id, time_min, kind, value.",
)
@out_option
@click.pass_obj
@guarded
def cmd_label(settings: Settings, scores_path: Path, out_dir: Path):
    """Label shifts from a long-form RASS/CAM/GCS table."""
    from src.data_collection.utils.ehr_csv_loader import read_csv_strict, write_csv
    from src.services.phenotype import label_scores_frame

    manifest = RunManifest(command="label", config_hash="", seed=settings.seed)
    scores = read_csv_strict(scores_path, ["patient_id", "stay_id", "time_min", "kind", "value"])
    scores["time_min"] = pd.to_numeric(scores["time_min"], errors="raise")
    labels = label_scores_frame(scores)
    path = write_csv(labels, out_dir / "labels.csv")

    manifest.record_inputs([scores_path])
    manifest.record_outputs([path])
    manifest.funnel = {
        "stays": int(labels["stay_id"].nunique()),
        "shifts": len(labels),
        "excluded_shifts": int((labels["label"] == "Excluded").sum()),
    }
    manifest.write(out_dir)
    click.echo(f"Labeled {len(labels)} shifts -> {path}")


@cli.command("prepare")
@click.option(
    "--raw",
    "raw_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory holding encounters.csv, static.csv and events.csv.",
)
@out_option
@click.option("--task", type=click.Choice(TASKS), default=None)
@click.option("--tabular/--no-tabular", default=None, help="Also write the aggregated baseline matrix.")
@click.pass_obj
@guarded
def cmd_prepare(settings: Settings, raw_dir: Path, out_dir: Path, task, tabular):
    """Turn raw CSV extracts into a split, encoded dataset bundle."""
    from src.data_collection.pipeline import CohortPipeline, DatasetBundle
    from src.data_collection.utils.ehr_csv_loader import RAW_FILES

    config = with_overrides(settings.run_config.prepare, task=task, tabular=tabular)
    manifest = RunManifest(command="prepare", config_hash=config_hash(config), seed=settings.seed)

    cohort = CohortPipeline(config, settings.seed, settings.threads).prepare(raw_dir)
    manifest.mark("prepare")
    bundle = DatasetBundle(out_dir)
    paths = bundle.write(cohort, tabular=config.tabular)

    manifest.record_inputs([raw_dir / name for name in RAW_FILES])
    manifest.record_outputs(paths)
    manifest.funnel = cohort.funnel
    manifest.extra = bundle.metadata(cohort)
    manifest.write(out_dir)

    split = cohort.split
    click.echo(
        f"{cohort.funnel['retained_shifts']} shifts retained "
        f"(train {len(split.train)}, validation {len(split.validation)}, test {len(split.test)}), "
        f"{cohort.preprocessor.vocabulary.size} variables"
    )


def _head_config(settings: Settings, head: Optional[str], attention: Optional[str]):
    return with_overrides(
        settings.run_config.model,
        head=None if head is None else HEADS[head],
        attention=attention,
    )


def _check_task(task: str, class_count: int) -> None:
    if class_count == 1 and task != "delirium":
        raise ConfigError(
            f"The binary delirium head needs a bundle prepared with --task delirium, got {task!r}"
        )


def _bundle_inputs(bundle) -> List[Path]:
    return [bundle.directory / name for name in sorted(bundle.manifest.get("output_digests", {}))]


@cli.command("train")
@bundle_option
@out_option
@click.option("--head", type=click.Choice(sorted(HEADS)), default=None)
@click.option(
    "--attention", type=click.Choice(["full", "sliding_window_global"]), default=None
)
@click.pass_obj
@guarded
def cmd_train(settings: Settings, bundle_dir: Path, out_dir: Path, head, attention):
    """Train the transformer on the bundle's primary split."""
    from src.data_collection.pipeline import DatasetBundle
    from src.data_collection.utils.ehr_csv_loader import write_csv
    from src.models.acuity.training import AcuityTransformer
    from src.services.evaluation.cross_validation import binary_records

    run = settings.run_config
    model_config = _head_config(settings, head, attention)
    training_config = run.training
    hashed = {"model": model_config.model_dump(mode="json"), "training": training_config.model_dump(mode="json")}
    manifest = RunManifest(
        command="train",
        config_hash=config_hash(RunConfig(model=model_config, training=training_config)),
        seed=settings.seed,
    )

    bundle = DatasetBundle(bundle_dir).load()
    _check_task(bundle.task, model_config.class_count)
    train, validation = bundle.split.train, bundle.split.validation
    if model_config.class_count == 1:
        train, validation = binary_records(train), binary_records(validation)
    preprocessor = bundle.preprocessor

    model = AcuityTransformer(model_config, training_config, settings.seed, settings.progress).fit(
        preprocessor.encode_all(train),
        preprocessor.encode_all(validation),
        preprocessor.vocabulary,
    )
    manifest.mark("train")

    checkpoint = model.save(
        out_dir / CHECKPOINT_FILE,
        extra={"task": bundle.task, "preprocessor": bundle.preprocessor_state, "config": hashed},
    )
    history = write_csv(
        pd.DataFrame([asdict(record) for record in model.history]), out_dir / HISTORY_FILE
    )
    manifest.record_inputs(_bundle_inputs(bundle))
    manifest.record_outputs([checkpoint, history])
    manifest.funnel = {"train_shifts": len(train), "validation_shifts": len(validation)}
    manifest.write(out_dir)

    best = [record for record in model.history if record.improved]
    auroc = best[-1].validation_auroc if best else None
    click.echo(
        f"Trained {len(model.history)} epochs; best validation mean AUROC "
        + ("n/a" if auroc is None else f"{auroc:.4f}")
    )


@cli.command("evaluate")
@bundle_option
@out_option
@click.option(
    "--checkpoint",
    "checkpoint_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Score a trained checkpoint instead of training per fold.",
)
@click.option("--baseline", type=click.Choice(["logistic"]), default=None)
@click.option("--head", type=click.Choice(sorted(HEADS)), default=None)
@click.option(
    "--attention", type=click.Choice(["full", "sliding_window_global"]), default=None
)
@click.option("--folds", type=click.IntRange(min=1), default=None)
@click.option("--bootstrap", "bootstrap_iterations", type=click.IntRange(min=1), default=None)
@click.option("--patient-level/--shift-level", "patient_level_bootstrap", default=None)
@click.pass_obj
@guarded
def cmd_evaluate(
    settings: Settings,
    bundle_dir: Path,
    out_dir: Path,
    checkpoint_path,
    baseline,
    head,
    attention,
    folds,
    bootstrap_iterations,
    patient_level_bootstrap,
):
    """Cross-validate and bootstrap a model on the bundle's test set."""
    from src.data_collection.pipeline import DatasetBundle
    from src.data_collection.preprocessor import ShiftPreprocessor
    from src.models.acuity.training import AcuityTransformer
    from src.services.evaluation.cross_validation import (
        CheckpointEstimator,
        LogisticEstimator,
        TransformerEstimator,
        run_cv,
    )
    from src.services.evaluation.report import (
        curve_frames,
        summary_lines,
        write_curves,
        write_predictions,
        write_report,
    )

    if checkpoint_path is not None and baseline is not None:
        raise ConfigError("--checkpoint and --baseline are mutually exclusive")

    run = settings.run_config
    evaluation_config = with_overrides(
        run.evaluation,
        folds=folds,
        bootstrap_iterations=bootstrap_iterations,
        patient_level_bootstrap=patient_level_bootstrap,
    )
    model_config = _head_config(settings, head, attention)
    bundle = DatasetBundle(bundle_dir).load()
    inputs = _bundle_inputs(bundle)

    if checkpoint_path is not None:
        model = AcuityTransformer.load(checkpoint_path, expected_vocabulary_hash=bundle.vocabulary_hash)
        if "preprocessor" not in model.meta:
            raise ConfigError(f"{checkpoint_path} carries no preprocessor state")
        estimator = CheckpointEstimator(model, ShiftPreprocessor.from_state(model.meta["preprocessor"]))
        hashed = RunConfig(model=model.model_config, training=model.training_config, evaluation=evaluation_config)
        inputs.append(checkpoint_path)
    elif baseline == "logistic":
        estimator = LogisticEstimator(model_config.class_count, settings.seed, run.training.class_weighting)
        hashed = RunConfig(model=model_config, evaluation=evaluation_config)
    else:
        estimator = TransformerEstimator(model_config, run.training, settings.seed, settings.progress)
        hashed = RunConfig(model=model_config, training=run.training, evaluation=evaluation_config)
    _check_task(bundle.task, estimator.class_count)

    manifest = RunManifest(command="evaluate", config_hash=hashed.hash, seed=settings.seed)
    result = run_cv(bundle, estimator, evaluation_config, settings.seed, settings.threads, hashed.hash)
    manifest.mark("evaluate")

    paths = [write_report(result.report, out_dir), write_predictions(result.predictions, out_dir)]
    if evaluation_config.export_curves:
        paths += write_curves(
            curve_frames(result.test_probabilities, result.test_targets, result.classes), out_dir
        )
    manifest.record_inputs(inputs)
    manifest.record_outputs(paths)
    manifest.funnel = {
        "test_shifts": result.report.folds[0].test_shifts,
        "folds": len(result.report.folds),
    }
    manifest.extra = {"undefined": result.report.undefined}
    manifest.write(out_dir)

    for line in summary_lines(result.report):
        click.echo(line)


@cli.command("report")
@click.option(
    "--input",
    "input_path",
    required=True,
    type=click.Path(path_type=Path),
    help="report.json, or the directory 'evaluate' wrote it into.",
)
@out_option
@click.pass_obj
@guarded
def cmd_report(settings: Settings, input_path: Path, out_dir: Path):
    """Flatten an evaluation report into CSV tables and curve points."""
    from src.data_collection.utils.ehr_csv_loader import write_csv
    from src.services.evaluation.report import (
        METRICS_FILE,
        PREDICTIONS_FILE,
        REPORT_FILE,
        confusion_frame,
        curves_from_predictions,
        flatten_report,
        load_predictions,
        load_report,
        summary_lines,
        write_curves,
    )

    report_path = input_path / REPORT_FILE if input_path.is_dir() else input_path
    report = load_report(report_path)
    manifest = RunManifest(command="report", config_hash=report.config_hash, seed=report.seed)
    inputs = [report_path]

    paths = [write_csv(flatten_report(report), out_dir / METRICS_FILE)]
    confusion = confusion_frame(report)
    if confusion is not None:
        paths.append(write_csv(confusion.reset_index(), out_dir / CONFUSION_FILE))
    folds = pd.DataFrame(
        [
            {
                "fold": fold.fold,
                "train_shifts": fold.train_shifts,
                "validation_shifts": fold.validation_shifts,
                "test_shifts": fold.test_shifts,
                "mean_test_auroc": fold.mean_test_auroc,
                **{f"threshold_{name}": value for name, value in sorted(fold.thresholds.items())},
            }
            for fold in report.folds
        ]
    )
    paths.append(write_csv(folds, out_dir / SUMMARY_FILE))

    predictions_path = report_path.parent / PREDICTIONS_FILE
    if predictions_path.exists():
        inputs.append(predictions_path)
        paths += write_curves(
            curves_from_predictions(load_predictions(predictions_path), report.classes), out_dir
        )
    else:
        logger.info("curves_skipped", reason="no predictions next to the report")

    manifest.record_inputs(inputs)
    manifest.record_outputs(paths)
    manifest.write(out_dir)
    for line in summary_lines(report):
        click.echo(line)


def main():
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
