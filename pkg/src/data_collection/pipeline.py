"""
Cohort preparation pipeline

Raw CSV extracts go through merging, phenotype labeling, the shift filters and
a patient-level split, and come out as a dataset bundle directory that the
training and evaluation commands read back.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core.config import DEFAULT_FOLD_COUNT, DEFAULT_TEST_FRACTION
from src.core.exceptions import ConfigError, InputValidationError, MissingInputError
from src.core.logger import get_logger
from src.core.manifest import MANIFEST_NAME, read_manifest, verify_digests
from src.data_collection.preprocessor import ShiftPreprocessor
from src.data_collection.transformers.encounter_transformer import (
    FUNNEL_STAGES,
    transform_patient,
)
from src.data_collection.utils.ehr_csv_loader import (
    RAW_FILES,
    catalog_from_records,
    load_raw_cohort,
    write_csv,
)
from src.models.domain.acuity import AcuityLabel
from src.models.domain.encounter import DatasetSplit, RawEncounter, ShiftRecord, VariableSpec
from src.schemas.configs import PrepareConfig

logger = get_logger(__name__)

SHIFTS_FILE = "shifts.csv"
WINDOWS_FILE = "windows.csv"
STATIC_FILE = "static.csv"
TABULAR_FILE = "tabular.csv"

TEST_FOLD = -1
SPLIT_TRAIN, SPLIT_VALIDATION, SPLIT_TEST = "train", "validation", "test"
PRIMARY_FOLD = 0


def split_dataset(
    records: Sequence[ShiftRecord],
    seed: int,
    fold_count: int = DEFAULT_FOLD_COUNT,
    test_fraction: float = DEFAULT_TEST_FRACTION,
) -> DatasetSplit:
    """Patient-disjoint test hold-out plus cross-validation folds.

    Patients are shuffled with ``seed``; the first ``round(test_fraction * P)``
    become the test set and the rest are dealt round-robin into folds. Fold 0
    is the validation fold of the primary split.

    Raises:
        ConfigError: If ``fold_count < 2`` or ``test_fraction`` is outside [0, 1).
        InputValidationError: If fewer patients than folds remain.
    """
    if fold_count < 2:
        raise ConfigError(f"fold_count must be at least 2, got {fold_count}")
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in [0, 1), got {test_fraction}")

    patients = sorted({record.patient_id for record in records})
    rng = np.random.default_rng(seed)
    shuffled = [patients[i] for i in rng.permutation(len(patients))]
    test_count = int(round(test_fraction * len(patients)))
    test_patients = shuffled[:test_count]
    pool = shuffled[test_count:]
    if len(pool) < fold_count:
        raise InputValidationError(
            f"{len(pool)} patients cannot fill {fold_count} cross-validation folds"
        )

    folds = {patient: i % fold_count for i, patient in enumerate(pool)}
    test_set = set(test_patients)
    ordered = sorted(records, key=lambda r: r.key)
    return DatasetSplit(
        train=[r for r in ordered if folds.get(r.patient_id, TEST_FOLD) > PRIMARY_FOLD],
        validation=[r for r in ordered if folds.get(r.patient_id) == PRIMARY_FOLD],
        test=[r for r in ordered if r.patient_id in test_set],
        folds=folds,
        test_patients=sorted(test_patients),
        fold_count=fold_count,
    )


@dataclass
class PreparedCohort:
    """Everything ``prepare`` produces before it is written to disk."""

    catalog: List[VariableSpec]
    split: DatasetSplit
    preprocessor: ShiftPreprocessor
    funnel: Dict[str, int]
    rejections: Dict[str, int]
    task: str
    seed: int
    config: PrepareConfig
    labeled_shifts: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def records(self) -> List[ShiftRecord]:
        return sorted(
            self.split.train + self.split.validation + self.split.test, key=lambda r: r.key
        )


def resolve_catalog(raw_dir: Path, config: PrepareConfig) -> List[VariableSpec]:
    """Variables declared in the config, else the catalog in the raw manifest."""
    if config.variables:
        return catalog_from_records([item.model_dump() for item in config.variables])
    manifest = read_manifest(raw_dir)
    catalog = (manifest or {}).get("extra", {}).get("catalog")
    if not catalog:
        raise ConfigError(
            "No variable catalog: declare [prepare] variables or provide a raw "
            f"directory with a {MANIFEST_NAME} carrying one"
        )
    return catalog_from_records(catalog)


class CohortPipeline:
    """Runs the preparation steps for one raw cohort."""

    def __init__(self, config: PrepareConfig, seed: int, threads: int = 1):
        self.config = config
        self.seed = seed
        self.threads = threads

    def prepare(self, raw_dir: Path) -> PreparedCohort:
        raw_dir = Path(raw_dir)
        for name in RAW_FILES:
            if not (raw_dir / name).exists():
                raise MissingInputError(str(raw_dir / name))
        catalog = resolve_catalog(raw_dir, self.config)
        encounters, rejections = load_raw_cohort(raw_dir, catalog)

        by_patient: Dict[str, List[RawEncounter]] = defaultdict(list)
        for encounter in encounters:
            by_patient[encounter.patient_id].append(encounter)

        # Patients are independent; results come back in submission order
        results = Parallel(n_jobs=self.threads, backend="threading")(
            delayed(transform_patient)(by_patient[patient], self.config.task)
            for patient in sorted(by_patient)
        )

        records: List[ShiftRecord] = []
        labeled_frames = []
        funnel = {"raw_shifts": 0, **{stage: 0 for stage in FUNNEL_STAGES}, "retained_shifts": 0}
        for patient_records, labeled, patient_funnel in results:
            records.extend(patient_records)
            labeled_frames.append(labeled)
            for key, value in patient_funnel.items():
                funnel[key] += value

        if not records:
            raise InputValidationError("No shift survived the extraction filters")

        split = split_dataset(
            records, self.seed, self.config.fold_count, self.config.test_fraction
        )
        preprocessor = ShiftPreprocessor(
            catalog, self.config.prevalence_threshold, self.config.max_sequence_length
        ).fit(split.train)

        funnel["retained_stays"] = len({record.stay_id for record in records})
        funnel["retained_patients"] = len({record.patient_id for record in records})
        logger.info(
            "cohort_prepared",
            task=self.config.task,
            shifts=len(records),
            train=len(split.train),
            validation=len(split.validation),
            test=len(split.test),
            retained_variables=preprocessor.vocabulary.size,
        )
        return PreparedCohort(
            catalog=catalog,
            split=split,
            preprocessor=preprocessor,
            funnel=funnel,
            rejections=rejections,
            task=self.config.task,
            seed=self.seed,
            config=self.config,
            labeled_shifts=pd.concat(labeled_frames, ignore_index=True),
        )


def _split_of(record: ShiftRecord, split: DatasetSplit) -> Tuple[str, int]:
    fold = split.folds.get(record.patient_id, TEST_FOLD)
    if fold == TEST_FOLD:
        return SPLIT_TEST, TEST_FOLD
    return (SPLIT_VALIDATION if fold == PRIMARY_FOLD else SPLIT_TRAIN), fold


class DatasetBundle:
    """Reads and writes the prepared dataset directory.

    Layout: ``shifts.csv`` (one row per retained shift with its label, split
    and fold), ``windows.csv`` (observations per shift as offsets from the
    window start), ``static.csv`` (static features per stay), an optional
    ``tabular.csv`` and the run manifest.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def write(self, cohort: PreparedCohort, tabular: bool = False) -> List[Path]:
        records = cohort.records
        shift_rows, window_frames, static_rows = [], [], {}
        for record in records:
            split_name, fold = _split_of(record, cohort.split)
            binary = record.binary_delirium_label
            shift_rows.append(
                {
                    "patient_id": record.patient_id,
                    "stay_id": record.stay_id,
                    "shift_index": record.shift_index,
                    "shift_start_min": record.shift_start,
                    "label": record.label.value,
                    "binary_delirium_label": "" if binary is None else int(binary),
                    "split": split_name,
                    "fold": fold,
                }
            )
            if len(record):
                window_frames.append(
                    pd.DataFrame(
                        {
                            "stay_id": record.stay_id,
                            "shift_index": record.shift_index,
                            "offset_min": record.window_minutes,
                            "name": record.window_names,
                            "value": record.window_values,
                        }
                    )
                )
            for name, value in sorted(record.static.items()):
                static_rows[(record.stay_id, name)] = value

        paths = [
            write_csv(pd.DataFrame(shift_rows), self.directory / SHIFTS_FILE),
            write_csv(
                pd.concat(window_frames, ignore_index=True)
                if window_frames
                else pd.DataFrame(columns=["stay_id", "shift_index", "offset_min", "name", "value"]),
                self.directory / WINDOWS_FILE,
            ),
            write_csv(
                pd.DataFrame(
                    [
                        {"stay_id": stay, "name": name, "value": "" if value is None else value}
                        for (stay, name), value in sorted(static_rows.items())
                    ],
                    columns=["stay_id", "name", "value"],
                ),
                self.directory / STATIC_FILE,
            ),
        ]
        if tabular:
            matrix = cohort.preprocessor.tabular(records)
            frame = pd.DataFrame(matrix, columns=cohort.preprocessor.tabular_columns)
            keys = pd.DataFrame(shift_rows)[
                ["patient_id", "stay_id", "shift_index", "label", "split", "fold"]
            ]
            paths.append(
                write_csv(pd.concat([keys, frame], axis=1), self.directory / TABULAR_FILE)
            )
        return paths

    def metadata(self, cohort: PreparedCohort) -> Dict:
        """Manifest ``extra`` block describing the bundle."""
        return {
            "task": cohort.task,
            "fold_count": cohort.split.fold_count,
            "test_patients": cohort.split.test_patients,
            "catalog": [spec.to_dict() for spec in cohort.catalog],
            "vocabulary": cohort.preprocessor.vocabulary.to_list(),
            "vocabulary_hash": cohort.preprocessor.vocabulary.hash,
            "preprocessor": cohort.preprocessor.to_state(),
            "rejected_rows": cohort.rejections,
            "prepare": cohort.config.model_dump(mode="json"),
        }

    def load(self) -> "LoadedBundle":
        """Read a bundle back, verifying the digests recorded at prepare time."""
        manifest = read_manifest(self.directory)
        if manifest is None:
            raise MissingInputError(str(self.directory / MANIFEST_NAME))
        verify_digests(self.directory, manifest)

        shifts = pd.read_csv(
            self.directory / SHIFTS_FILE,
            dtype={"patient_id": str, "stay_id": str, "binary_delirium_label": "Int64"},
            keep_default_na=True,
        )
        windows = pd.read_csv(
            self.directory / WINDOWS_FILE,
            dtype={"stay_id": str, "name": str},
            keep_default_na=False,
            na_values={"value": [""]},
        )
        static = pd.read_csv(
            self.directory / STATIC_FILE, dtype=str, keep_default_na=False
        )

        static_by_stay: Dict[str, Dict[str, Optional[str]]] = defaultdict(dict)
        for stay, name, value in static.itertuples(index=False):
            static_by_stay[stay][name] = value if value != "" else None

        grouped = {key: frame for key, frame in windows.groupby(["stay_id", "shift_index"], sort=False)}
        empty = np.zeros(0, dtype=np.float64)

        records, folds, test_patients = [], {}, set()
        for row in shifts.itertuples(index=False):
            window = grouped.get((row.stay_id, row.shift_index))
            binary = row.binary_delirium_label
            records.append(
                ShiftRecord(
                    patient_id=row.patient_id,
                    stay_id=row.stay_id,
                    shift_index=int(row.shift_index),
                    shift_start=float(row.shift_start_min),
                    label=AcuityLabel.parse(row.label),
                    window_minutes=empty if window is None else window["offset_min"].to_numpy(np.float64),
                    window_names=np.zeros(0, dtype=object) if window is None else window["name"].to_numpy(object),
                    window_values=empty if window is None else window["value"].to_numpy(np.float64),
                    static=dict(static_by_stay.get(row.stay_id, {})),
                    binary_delirium_label=None if pd.isna(binary) else bool(binary),
                )
            )
            if row.split == SPLIT_TEST:
                test_patients.add(row.patient_id)
            else:
                folds[row.patient_id] = int(row.fold)

        extra = manifest["extra"]
        split = DatasetSplit(
            train=[r for r in records if folds.get(r.patient_id, TEST_FOLD) > PRIMARY_FOLD],
            validation=[r for r in records if folds.get(r.patient_id) == PRIMARY_FOLD],
            test=[r for r in records if r.patient_id in test_patients],
            folds=folds,
            test_patients=sorted(test_patients),
            fold_count=int(extra["fold_count"]),
        )
        return LoadedBundle(
            directory=self.directory,
            split=split,
            catalog=catalog_from_records(extra["catalog"]),
            task=extra["task"],
            seed=int(manifest["seed"]),
            vocabulary_hash=extra["vocabulary_hash"],
            preprocessor_state=extra["preprocessor"],
            manifest=manifest,
        )


@dataclass
class LoadedBundle:
    directory: Path
    split: DatasetSplit
    catalog: List[VariableSpec]
    task: str
    seed: int
    vocabulary_hash: str
    preprocessor_state: Dict
    manifest: Dict

    @property
    def preprocessor(self) -> ShiftPreprocessor:
        """The preprocessor fit on the primary training split."""
        return ShiftPreprocessor.from_state(self.preprocessor_state)

    def fit_preprocessor(self, records: Sequence[ShiftRecord]) -> ShiftPreprocessor:
        """A fresh preprocessor, with the bundle's settings, fit on ``records``."""
        state = self.preprocessor_state
        return ShiftPreprocessor(
            self.catalog,
            float(state["prevalence_threshold"]),
            int(state["max_sequence_length"]),
        ).fit(records)
