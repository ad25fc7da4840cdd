"""Load raw EHR extracts (encounters, static features, temporal events) from CSV."""

from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.config import SHIFT_MINUTES
from src.core.exceptions import InputValidationError, MissingInputError
from src.core.logger import get_logger
from src.models.domain.acuity import CamResult
from src.models.domain.encounter import (
    RawEncounter,
    VariableSpec,
    canonical_name,
    canonical_unit,
)

logger = get_logger(__name__)

ENCOUNTERS_FILE = "encounters.csv"
STATIC_FILE = "static.csv"
EVENTS_FILE = "events.csv"
RAW_FILES = (ENCOUNTERS_FILE, STATIC_FILE, EVENTS_FILE)

ENCOUNTER_COLUMNS = [
    "patient_id",
    "encounter_id",
    "admit_iso8601",
    "discharge_iso8601",
    "death_iso8601",
]
STATIC_COLUMNS = ["patient_id", "encounter_id", "name", "value"]
EVENT_COLUMNS = ["patient_id", "encounter_id", "time_iso8601", "name", "value", "unit"]

# Events older than this before admission can never reach a retained window
HISTORY_HORIZON_MINUTES = SHIFT_MINUTES

CAM_VALUES = {CamResult.POSITIVE: 1.0, CamResult.NEGATIVE: 0.0}


def read_csv_strict(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    """Read a CSV as strings and check its header.

    Args:
        path: CSV file to read.
        columns: Columns that must be present.

    Returns:
        DataFrame with every column typed as ``str`` and blanks as ``""``.

    Raises:
        MissingInputError: If the file does not exist.
        InputValidationError: If required columns are missing.
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = set(columns) - set(df.columns)
    if missing:
        raise InputValidationError(f"{path.name}: missing columns {sorted(missing)}")
    return df


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    """Write a CSV with a fixed layout so reruns are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
    return path


def _parse_time(raw: pd.Series, what: str) -> pd.Series:
    try:
        return pd.to_datetime(raw, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise InputValidationError(f"Unparseable {what} timestamp: {exc}") from exc


class EHRCsvLoader:
    """Parse the three raw CSV files into :class:`RawEncounter` objects.

    Event rows are checked against a variable catalog: names are canonicalized,
    unknown variables and unit mismatches are rejected and counted rather than
    failing the whole load.
    """

    def __init__(self, raw_dir: Path, catalog: Sequence[VariableSpec]):
        self.raw_dir = Path(raw_dir)
        if not catalog:
            raise InputValidationError("The variable catalog is empty")
        self.catalog: Dict[str, VariableSpec] = {spec.name: spec for spec in catalog}
        self.rejections: Counter = Counter()

    @property
    def paths(self) -> List[Path]:
        return [self.raw_dir / name for name in RAW_FILES]

    def check_inputs(self) -> None:
        """Fail fast, naming the first absent input file."""
        for path in self.paths:
            if not path.exists():
                raise MissingInputError(str(path))

    def load(self) -> List[RawEncounter]:
        """Load every encounter, sorted by (patient_id, admit time)."""
        self.check_inputs()
        self.rejections = Counter()

        encounters = self._load_encounters()
        static = self._load_static()
        events = self._load_events(encounters)

        grouped_events = {key: frame for key, frame in events.groupby(
            ["patient_id", "encounter_id"], sort=False
        )}
        grouped_static = {key: frame for key, frame in static.groupby(
            ["patient_id", "encounter_id"], sort=False
        )}

        result = []
        for row in encounters.itertuples(index=False):
            key = (row.patient_id, row.encounter_id)
            stay_events = grouped_events.get(key)
            if stay_events is None:
                stay_events = pd.DataFrame(columns=["time", "name", "value", "unit"])
            else:
                stay_events = (
                    stay_events[["time", "name", "value", "unit"]]
                    .sort_values(["time", "name"], kind="mergesort")
                    .reset_index(drop=True)
                )
            stay_static: Dict[str, Optional[str]] = {}
            static_rows = grouped_static.get(key)
            if static_rows is not None:
                for name, value in zip(static_rows["name"], static_rows["value"]):
                    stay_static[canonical_name(name)] = value if value != "" else None
            result.append(
                RawEncounter(
                    patient_id=row.patient_id,
                    encounter_id=row.encounter_id,
                    admit_time=row.admit,
                    discharge_time=row.discharge,
                    death_time=None if pd.isna(row.death) else row.death,
                    static=stay_static,
                    events=stay_events,
                )
            )

        logger.info(
            "raw_cohort_loaded",
            encounters=len(result),
            events=len(events),
            rejected=dict(sorted(self.rejections.items())),
        )
        return result

    def _load_encounters(self) -> pd.DataFrame:
        df = read_csv_strict(self.raw_dir / ENCOUNTERS_FILE, ENCOUNTER_COLUMNS)
        if df.duplicated(["patient_id", "encounter_id"]).any():
            raise InputValidationError("encounters.csv: duplicate encounter rows")
        df = df.assign(
            admit=_parse_time(df["admit_iso8601"], "admission"),
            discharge=_parse_time(df["discharge_iso8601"], "discharge"),
            death=_parse_time(df["death_iso8601"].mask(df["death_iso8601"] == ""), "death"),
        )
        bad = df[~(df["admit"] < df["discharge"])]
        if len(bad):
            raise InputValidationError(
                f"encounters.csv: admission must precede discharge "
                f"(encounter {bad.iloc[0]['encounter_id']})"
            )
        return df.sort_values(["patient_id", "admit"], kind="mergesort").reset_index(
            drop=True
        )

    def _load_static(self) -> pd.DataFrame:
        return read_csv_strict(self.raw_dir / STATIC_FILE, STATIC_COLUMNS)

    def _load_events(self, encounters: pd.DataFrame) -> pd.DataFrame:
        df = read_csv_strict(self.raw_dir / EVENTS_FILE, EVENT_COLUMNS)
        if df.empty:
            return pd.DataFrame(
                columns=["patient_id", "encounter_id", "time", "name", "value", "unit"]
            )

        df = df.assign(
            name=df["name"].map(canonical_name),
            unit=df["unit"].map(canonical_unit),
        )

        known = df["name"].isin(list(self.catalog))
        self.rejections["unknown_variable"] += int((~known).sum())
        df = df[known]

        expected_units = df["name"].map(lambda name: self.catalog[name].unit)
        unit_ok = df["unit"] == expected_units
        self.rejections["unit_mismatch"] += int((~unit_ok).sum())
        df = df[unit_ok]

        values = self._parse_values(df)
        parsed = values.notna()
        self.rejections["unparseable_value"] += int((~parsed).sum())
        df = df.assign(value=values)[parsed]

        df = df.assign(time=_parse_time(df["time_iso8601"], "event"))

        # Keep only events inside [admit - history horizon, discharge]
        bounds = encounters.set_index(["patient_id", "encounter_id"])[
            ["admit", "discharge"]
        ]
        joined = df.join(bounds, on=["patient_id", "encounter_id"], how="left")
        orphan = joined["admit"].isna()
        self.rejections["unknown_encounter"] += int(orphan.sum())
        horizon = pd.Timedelta(minutes=HISTORY_HORIZON_MINUTES)
        in_range = (
            ~orphan
            & (joined["time"] >= joined["admit"] - horizon)
            & (joined["time"] <= joined["discharge"])
        )
        self.rejections["outside_encounter"] += int((~orphan & ~in_range).sum())
        return df[in_range.to_numpy()][
            ["patient_id", "encounter_id", "time", "name", "value", "unit"]
        ]

    def _parse_values(self, df: pd.DataFrame) -> pd.Series:
        """Numeric values; CAM results map to 1 (Positive) and 0 (Negative)."""
        numeric = pd.to_numeric(df["value"], errors="coerce")
        is_cam = df["name"] == "cam"
        if is_cam.any():

            def cam_value(raw: str) -> float:
                try:
                    return CAM_VALUES[CamResult.parse(raw)]
                except InputValidationError:
                    return np.nan

            numeric = numeric.where(~is_cam, df.loc[is_cam, "value"].map(cam_value))
        return numeric.astype(float)


def catalog_from_records(records: Sequence[Dict[str, str]]) -> List[VariableSpec]:
    """Build a catalog from ``{"name", "kind", "unit"}`` mappings."""
    specs = [VariableSpec.from_dict(item) for item in records]
    names = [spec.name for spec in specs]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise InputValidationError(f"Variable catalog declares duplicates: {duplicates}")
    return specs


def load_raw_cohort(
    raw_dir: Path, catalog: Sequence[VariableSpec]
) -> Tuple[List[RawEncounter], Dict[str, int]]:
    """Encounters of a raw directory and the per-reason row rejection counts."""
    loader = EHRCsvLoader(raw_dir, catalog)
    encounters = loader.load()
    return encounters, dict(sorted(loader.rejections.items()))
