"""Seeded synthetic ICU cohorts with a tunable, planted acuity signal.

Each patient draws from its own random stream ``default_rng([seed, index, stream])``
so a cohort is identical for any thread count. Shift classes are drawn first,
then RASS/CAM/GCS assessments that realize each class, then vitals, labs and
medications whose behavior in the 12 hours before a shift depends on that
shift's class with weight ``signal_strength``. Ground-truth labels are never
written directly: they come from running the phenotype labeling on the
generated assessments.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core.config import ENCOUNTER_MERGE_GAP_MINUTES, SHIFT_MINUTES
from src.core.exceptions import ConfigError
from src.core.logger import get_logger
from src.data_collection.transformers.encounter_transformer import shift_grid, transform_patient
from src.data_collection.utils.ehr_csv_loader import (
    ENCOUNTER_COLUMNS,
    ENCOUNTERS_FILE,
    EVENT_COLUMNS,
    EVENTS_FILE,
    STATIC_COLUMNS,
    STATIC_FILE,
    write_csv,
)
from src.models.domain.acuity import CLASS_NAMES, AcuityLabel, CamResult
from src.models.domain.encounter import RawEncounter, VariableKind, VariableSpec
from src.schemas.configs import SynthConfig

logger = get_logger(__name__)

LABELS_FILE = "labels.csv"
LABEL_COLUMNS = ["stay_id", "shift_index", "label"]

BASE_DATE = pd.Timestamp("2021-01-01")
MORTALITY_STREAM = 1_000_003
DEATH_MIN_LOS_MINUTES = 2 * SHIFT_MINUTES
SCORE_MARGIN_MINUTES = 30

# name, unit, baseline mean, baseline sd
VITALS = [
    ("heart_rate", "bpm", 85.0, 12.0),
    ("sbp", "mmhg", 120.0, 15.0),
    ("dbp", "mmhg", 70.0, 10.0),
    ("resp_rate", "breaths/min", 18.0, 4.0),
    ("spo2", "%", 96.0, 2.0),
    ("temperature", "c", 37.0, 0.5),
]
LABS = [
    ("lactate", "mmol/l", 1.5, 0.6),
    ("creatinine", "mg/dl", 1.1, 0.3),
    ("sodium", "mmol/l", 139.0, 3.0),
    ("potassium", "mmol/l", 4.1, 0.4),
    ("glucose", "mg/dl", 130.0, 30.0),
    ("wbc", "k/ul", 9.0, 3.0),
    ("hemoglobin", "g/dl", 11.0, 1.5),
    ("platelets", "k/ul", 220.0, 60.0),
]
MEDICATIONS = [
    ("propofol", "mcg/kg/min", 30.0, 10.0),
    ("dexmedetomidine", "mcg/kg/h", 0.5, 0.2),
    ("fentanyl", "mcg/h", 50.0, 20.0),
    ("midazolam", "mg/h", 2.0, 1.0),
    ("norepinephrine", "mcg/min", 8.0, 4.0),
    ("haloperidol", "mg", 2.5, 1.0),
]
SCORES = [("rass", "score"), ("cam", "result"), ("gcs", "score")]

# Fraction of stays in which each lab / medication appears, cycled
LAB_PREVALENCE = [1.0, 0.95, 0.9, 0.8, 0.6, 0.4, 0.2, 0.03, 0.02, 0.5]
MEDICATION_PREVALENCE = [0.5, 0.35, 0.5, 0.2, 0.25, 0.03, 0.02, 0.3]
LAB_INTERVAL_MINUTES = 360
LACTATE_INTERVAL_MINUTES = 240
MEDICATION_INTERVAL_MINUTES = 240

# Planted effects, in baseline standard deviations at full strength
RAMP_EFFECT = 3.0
BURST_EFFECT = 4.0
BURST_PROBABILITY = 0.4
AGE_RISK_SLOPE = 0.4

STATIC_CHOICES = {
    "sex": ["F", "M"],
    "race": ["asian", "black", "other", "white"],
    "admission_type": ["medical", "surgical", "trauma"],
    "smoking_status": ["current", "former", "never"],
}


def build_catalog(config: SynthConfig) -> List[VariableSpec]:
    """Variables a cohort with this config can emit, in a fixed order."""
    specs = [VariableSpec(name, VariableKind.VITAL, unit) for name, unit, _, _ in VITALS]
    specs += [VariableSpec(name, VariableKind.SCORE, unit) for name, unit in SCORES]
    specs += [VariableSpec(name, VariableKind.LAB, unit) for name, unit, _, _ in _labs(config)]
    specs += [
        VariableSpec(name, VariableKind.MEDICATION, unit)
        for name, unit, _, _ in _medications(config)
    ]
    return specs


def _labs(config: SynthConfig) -> List[Tuple[str, str, float, float]]:
    extra = [(f"lab_{i + 1:02d}", "u/l", 50.0, 10.0) for i in range(len(LABS), config.lab_count)]
    return (LABS + extra)[: config.lab_count]


def _medications(config: SynthConfig) -> List[Tuple[str, str, float, float]]:
    extra = [
        (f"med_{i + 1:02d}", "mg", 5.0, 2.0)
        for i in range(len(MEDICATIONS), config.medication_count)
    ]
    return (MEDICATIONS + extra)[: config.medication_count]


@dataclass
class StayPlan:
    """One merged ICU stay as planned before any event is drawn."""

    stay_id: str
    admit: pd.Timestamp
    discharge: pd.Timestamp
    intervals: List[Tuple[float, float]]
    shift_starts: np.ndarray
    classes: List[AcuityLabel]
    assessed: np.ndarray
    is_last_stay: bool
    dies: bool = False

    @property
    def los_minutes(self) -> float:
        return (self.discharge - self.admit).total_seconds() / 60.0

    @property
    def candidate_shifts(self) -> int:
        """Assessed shifts that survive the early-shift filter."""
        return int(np.sum(self.assessed & (self.shift_starts >= SHIFT_MINUTES)))


@dataclass
class PatientPlan:
    patient_id: str
    index: int
    static: Dict[str, Optional[str]]
    encounters: List[Tuple[str, pd.Timestamp, pd.Timestamp]]
    stays: List[StayPlan]


@dataclass
class SyntheticCohort:
    """Generated raw tables plus their ground truth."""

    encounters: pd.DataFrame
    static: pd.DataFrame
    events: pd.DataFrame
    labels: pd.DataFrame
    catalog: List[VariableSpec]
    funnel: Dict[str, int] = field(default_factory=dict)
    los_minutes: List[float] = field(default_factory=list)

    @classmethod
    def empty(cls) -> "SyntheticCohort":
        return cls(
            encounters=pd.DataFrame(columns=ENCOUNTER_COLUMNS),
            static=pd.DataFrame(columns=STATIC_COLUMNS),
            events=pd.DataFrame(columns=EVENT_COLUMNS),
            labels=pd.DataFrame(columns=LABEL_COLUMNS),
            catalog=[],
        )

    def write(self, out_dir: Path) -> List[Path]:
        out_dir = Path(out_dir)
        return [
            write_csv(self.encounters, out_dir / ENCOUNTERS_FILE),
            write_csv(self.static, out_dir / STATIC_FILE),
            write_csv(self.events, out_dir / EVENTS_FILE),
            write_csv(self.labels, out_dir / LABELS_FILE),
        ]


class SyntheticCohortGenerator:
    """Generates a :class:`SyntheticCohort` from a :class:`SynthConfig`."""

    def __init__(self, config: SynthConfig, seed: int, threads: int = 1):
        self.config = config
        self.seed = config.seed if config.seed is not None else seed
        self.threads = threads
        self.catalog = build_catalog(config)
        delirium, coma, mortality = config.rates
        self.mortality = mortality
        # Per-shift rates among surviving shifts so overall rates hit the targets
        self.delirium = delirium / (1.0 - mortality)
        self.coma = coma / (1.0 - mortality)

    def _rng(self, index: int, stream: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, index, stream])

    def generate(self) -> SyntheticCohort:
        config = self.config
        plans: List[PatientPlan] = Parallel(n_jobs=self.threads, backend="threading")(
            delayed(self._plan_patient)(index) for index in range(config.patients)
        )
        self._assign_deaths(plans)
        tables = Parallel(n_jobs=self.threads, backend="threading")(
            delayed(self._patient_tables)(plan) for plan in plans
        )

        encounters = pd.concat([t[0] for t in tables], ignore_index=True)
        static = pd.concat([t[1] for t in tables], ignore_index=True)
        events = pd.concat([t[2] for t in tables], ignore_index=True)
        labels = pd.concat([t[3] for t in tables], ignore_index=True)
        funnel: Dict[str, int] = {}
        for _, _, _, _, patient_funnel in tables:
            for key, value in patient_funnel.items():
                funnel[key] = funnel.get(key, 0) + value

        cohort = SyntheticCohort(
            encounters=encounters,
            static=static,
            events=events,
            labels=labels.reset_index(drop=True),
            catalog=self.catalog,
            funnel=funnel,
            los_minutes=[stay.los_minutes for plan in plans for stay in plan.stays],
        )
        logger.info(
            "synthetic_cohort_generated",
            patients=config.patients,
            encounters=len(encounters),
            events=len(events),
            retained_shifts=len(labels),
            signal_strength=config.signal_strength,
        )
        return cohort

    def _plan_patient(self, index: int) -> PatientPlan:
        config = self.config
        rng = self._rng(index, 0)
        patient_id = f"P{index + 1:05d}"

        age_z = float(rng.standard_normal())
        static: Dict[str, Optional[str]] = {
            "age": str(int(np.clip(round(60 + 15 * age_z), 18, 95))),
            "bmi": None if rng.random() < 0.1 else f"{rng.normal(28, 5):.1f}",
        }
        for name, choices in STATIC_CHOICES.items():
            static[name] = choices[int(rng.integers(len(choices)))]
        if rng.random() < 0.2:
            static["smoking_status"] = None

        admit = (
            BASE_DATE
            + pd.Timedelta(days=int(rng.integers(365)))
            + pd.Timedelta(minutes=int(rng.integers(24 * 60)))
        )
        encounters = []
        discharge = admit + pd.Timedelta(minutes=self._los_minutes(rng, 1.0))
        encounters.append((f"{patient_id}-E1", admit, discharge))
        if rng.random() < config.readmission_rate:
            if rng.random() < 0.5:
                gap_hours = float(rng.uniform(4, 20))
            else:
                gap_hours = float(rng.uniform(30, 200))
            second_admit = discharge + pd.Timedelta(minutes=int(gap_hours * 60))
            second_discharge = second_admit + pd.Timedelta(minutes=self._los_minutes(rng, 0.5))
            encounters.append((f"{patient_id}-E2", second_admit, second_discharge))

        risk = float(
            np.exp(
                AGE_RISK_SLOPE * config.signal_strength * age_z
                - 0.5 * (AGE_RISK_SLOPE * config.signal_strength) ** 2
            )
        )
        stays = self._plan_stays(rng, encounters, risk)
        return PatientPlan(patient_id, index, static, encounters, stays)

    def _los_minutes(self, rng: np.random.Generator, scale: float) -> int:
        median = self.config.los_median_days * 24 * 60 * scale
        return max(60, int(median * np.exp(self.config.los_sigma * rng.standard_normal())))

    def _plan_stays(
        self,
        rng: np.random.Generator,
        encounters: List[Tuple[str, pd.Timestamp, pd.Timestamp]],
        risk: float,
    ) -> List[StayPlan]:
        groups: List[List[Tuple[str, pd.Timestamp, pd.Timestamp]]] = [[encounters[0]]]
        for encounter in encounters[1:]:
            gap = (encounter[1] - groups[-1][-1][2]).total_seconds() / 60.0
            if gap < ENCOUNTER_MERGE_GAP_MINUTES:
                groups[-1].append(encounter)
            else:
                groups.append([encounter])

        p_delirium = self.delirium * risk
        p_coma = self.coma * risk
        total = p_delirium + p_coma
        if total > 0.95:
            p_delirium, p_coma = p_delirium * 0.95 / total, p_coma * 0.95 / total

        stays = []
        for number, group in enumerate(groups):
            admit, discharge = group[0][1], group[-1][2]
            starts = np.array(
                [(s - admit).total_seconds() / 60.0 for s in shift_grid(admit, discharge)]
            )
            draws = rng.random(len(starts))
            classes = [
                AcuityLabel.DELIRIUM
                if u < p_delirium
                else AcuityLabel.COMA
                if u < p_delirium + p_coma
                else AcuityLabel.NORMAL
                for u in draws
            ]
            assessed = rng.random(len(starts)) >= self.config.unassessed_shift_rate
            intervals = [
                ((a - admit).total_seconds() / 60.0, (d - admit).total_seconds() / 60.0)
                for _, a, d in group
            ]
            stays.append(
                StayPlan(
                    stay_id=group[0][0],
                    admit=admit,
                    discharge=discharge,
                    intervals=intervals,
                    shift_starts=starts,
                    classes=classes,
                    assessed=assessed,
                    is_last_stay=number == len(groups) - 1,
                )
            )
        return stays

    def _assign_deaths(self, plans: List[PatientPlan]) -> None:
        """Pick dying stays so Dead shifts make up the target share of retained shifts."""
        stays = [stay for plan in plans for stay in plan.stays]
        retained = sum(stay.candidate_shifts for stay in stays)
        wanted = int(round(self.mortality * retained))
        if wanted == 0:
            return
        eligible = [
            stay
            for stay in stays
            if stay.is_last_stay and stay.los_minutes >= DEATH_MIN_LOS_MINUTES
        ]
        if wanted > len(eligible):
            raise ConfigError(
                f"mortality rate {self.mortality} needs {wanted} deaths but only "
                f"{len(eligible)} stays are long enough; lower the rate or add patients"
            )
        rng = np.random.default_rng([self.seed, MORTALITY_STREAM])
        for position in sorted(rng.choice(len(eligible), size=wanted, replace=False)):
            stay = eligible[int(position)]
            stay.dies = True
            stay.classes[-1] = AcuityLabel.DEAD

    def _patient_tables(self, plan: PatientPlan) -> tuple:
        rng = self._rng(plan.index, 1)
        encounter_rows, static_rows, event_frames = [], [], []
        raw_encounters: List[RawEncounter] = []

        events_by_encounter: Dict[str, List[pd.DataFrame]] = {e[0]: [] for e in plan.encounters}
        for stay in plan.stays:
            for encounter_id, frame in self._stay_events(rng, stay, plan.encounters):
                events_by_encounter[encounter_id].append(frame)

        for encounter_id, admit, discharge in plan.encounters:
            death = None
            for stay in plan.stays:
                if stay.dies and stay.discharge == discharge:
                    death = discharge
            encounter_rows.append(
                {
                    "patient_id": plan.patient_id,
                    "encounter_id": encounter_id,
                    "admit_iso8601": admit.isoformat(),
                    "discharge_iso8601": discharge.isoformat(),
                    "death_iso8601": "" if death is None else death.isoformat(),
                }
            )
            for name in sorted(plan.static):
                value = plan.static[name]
                static_rows.append(
                    {
                        "patient_id": plan.patient_id,
                        "encounter_id": encounter_id,
                        "name": name,
                        "value": "" if value is None else value,
                    }
                )
            frames = events_by_encounter[encounter_id]
            events = (
                pd.concat(frames, ignore_index=True)
                .sort_values(["time", "name"], kind="mergesort")
                .reset_index(drop=True)
                if frames
                else pd.DataFrame(columns=["time", "name", "value", "unit", "text"])
            )
            raw_encounters.append(
                RawEncounter(
                    patient_id=plan.patient_id,
                    encounter_id=encounter_id,
                    admit_time=admit,
                    discharge_time=discharge,
                    death_time=death,
                    static=dict(plan.static),
                    events=events[["time", "name", "value", "unit"]],
                )
            )
            if len(events):
                event_frames.append(
                    pd.DataFrame(
                        {
                            "patient_id": plan.patient_id,
                            "encounter_id": encounter_id,
                            "time_iso8601": events["time"].dt.strftime("%Y-%m-%dT%H:%M:%S"),
                            "name": events["name"],
                            "value": events["text"],
                            "unit": events["unit"],
                        }
                    )
                )

        task = self.config.preset
        records, _, funnel = transform_patient(raw_encounters, task)
        labels = pd.DataFrame(
            [
                {"stay_id": r.stay_id, "shift_index": r.shift_index, "label": r.label.value}
                for r in records
            ],
            columns=LABEL_COLUMNS,
        )
        return (
            pd.DataFrame(encounter_rows, columns=ENCOUNTER_COLUMNS),
            pd.DataFrame(static_rows, columns=STATIC_COLUMNS),
            pd.concat(event_frames, ignore_index=True)
            if event_frames
            else pd.DataFrame(columns=EVENT_COLUMNS),
            labels,
            funnel,
        )

    def _stay_events(
        self,
        rng: np.random.Generator,
        stay: StayPlan,
        encounters: List[Tuple[str, pd.Timestamp, pd.Timestamp]],
    ) -> List[Tuple[str, pd.DataFrame]]:
        """Events of one stay, split back into its encounters."""
        columns: Dict[str, list] = {"minute": [], "name": [], "value": [], "unit": [], "text": []}

        def emit(minutes: np.ndarray, name: str, values: np.ndarray, unit: str) -> None:
            rounded = np.round(values, 2)
            columns["minute"].extend(minutes.tolist())
            columns["name"].extend([name] * len(minutes))
            columns["value"].extend(rounded.tolist())
            columns["unit"].extend([unit] * len(minutes))
            columns["text"].extend(str(v) for v in rounded.tolist())

        self._emit_scores(rng, stay, columns)
        strength = self.config.signal_strength
        vital_step = 60.0 / self.config.events_per_hour
        for name, unit, mean, sd in VITALS:
            minutes = self._schedule(rng, stay, vital_step)
            values = mean + sd * (
                rng.standard_normal(len(minutes)) + strength * self._effect(rng, stay, name, minutes)
            )
            emit(minutes, name, values, unit)

        for position, (name, unit, mean, sd) in enumerate(_labs(self.config)):
            prevalence = LAB_PREVALENCE[position % len(LAB_PREVALENCE)]
            present = rng.random() < prevalence
            step = LACTATE_INTERVAL_MINUTES if name == "lactate" else LAB_INTERVAL_MINUTES
            minutes = self._schedule(rng, stay, step)
            noise = rng.standard_normal(len(minutes))
            if not present:
                continue
            values = mean + sd * (noise + strength * self._effect(rng, stay, name, minutes))
            emit(minutes, name, np.maximum(values, 0.1), unit)

        for position, (name, unit, mean, sd) in enumerate(_medications(self.config)):
            prevalence = MEDICATION_PREVALENCE[position % len(MEDICATION_PREVALENCE)]
            present = rng.random() < prevalence
            minutes = self._schedule(rng, stay, MEDICATION_INTERVAL_MINUTES)
            doses = np.abs(mean + sd * rng.standard_normal(len(minutes)))
            if present:
                emit(minutes, name, doses, unit)

        frame = pd.DataFrame(columns)
        frame["time"] = stay.admit + pd.to_timedelta(frame["minute"], unit="m")
        result = []
        for encounter_id, admit, discharge in encounters:
            inside = (frame["time"] >= admit) & (frame["time"] <= discharge)
            if admit >= stay.admit and discharge <= stay.discharge:
                result.append(
                    (encounter_id, frame.loc[inside, ["time", "name", "value", "unit", "text"]])
                )
        return result

    def _schedule(self, rng: np.random.Generator, stay: StayPlan, step: float) -> np.ndarray:
        """Integer-minute measurement times over the covered parts of a stay."""
        pieces = []
        for start, end in stay.intervals:
            count = int((end - start) // step)
            base = start + step * np.arange(count)
            jitter = rng.integers(0, max(1, int(step)), size=count)
            pieces.append(np.minimum(np.floor(base + jitter), end))
        return np.concatenate(pieces) if pieces else np.zeros(0)

    def _window_positions(self, stay: StayPlan, minutes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Index of the shift whose input window holds each minute, and the phase in (0, 1]."""
        first = stay.shift_starts[0]
        index = np.ceil((minutes - first) / SHIFT_MINUTES).astype(int)
        window_start = first + (index - 1) * SHIFT_MINUTES
        phase = (minutes - window_start) / SHIFT_MINUTES
        return index, phase

    def _effect(
        self, rng: np.random.Generator, stay: StayPlan, name: str, minutes: np.ndarray
    ) -> np.ndarray:
        """Class-dependent shift, in baseline sds, of each measurement."""
        index, phase = self._window_positions(stay, minutes)
        inside = (index >= 0) & (index < len(stay.classes))
        classes = np.array(
            [stay.classes[i].value if ok else AcuityLabel.NORMAL.value for i, ok in zip(index, inside)],
            dtype=object,
        )
        bursts = rng.random(len(minutes)) < BURST_PROBABILITY
        signs = np.where(rng.random(len(minutes)) < 0.5, -1.0, 1.0)

        effect = np.zeros(len(minutes))
        coma = classes == AcuityLabel.COMA.value
        delirium = classes == AcuityLabel.DELIRIUM.value
        dead = classes == AcuityLabel.DEAD.value
        if name in ("heart_rate", "resp_rate"):
            effect[coma] = -RAMP_EFFECT * phase[coma]
        if name in ("sbp", "temperature"):
            burst = delirium & bursts
            effect[burst] = BURST_EFFECT * signs[burst]
        if name == "spo2":
            effect[dead] = -RAMP_EFFECT * phase[dead]
        if name == "lactate":
            effect[dead] = RAMP_EFFECT * phase[dead]
        return effect

    def _emit_scores(self, rng: np.random.Generator, stay: StayPlan, columns: Dict[str, list]) -> None:
        """One RASS/CAM/GCS assessment per assessed shift, realizing its class."""
        for index, start in enumerate(stay.shift_starts):
            klass = stay.classes[index]
            rass = int(rng.integers(-1, 2))
            gcs = int(rng.integers(14, 16))
            cam: Optional[CamResult] = CamResult.NEGATIVE
            if klass is AcuityLabel.DELIRIUM:
                rass, gcs, cam = int(rng.integers(-2, 3)), int(rng.integers(9, 15)), CamResult.POSITIVE
            elif klass is AcuityLabel.COMA:
                rass, gcs, cam = int(rng.integers(-5, -3)), int(rng.integers(3, 9)), None
            moment = self._assessment_minute(rng, stay, float(start))
            if moment is None or not stay.assessed[index]:
                continue
            for name, unit in SCORES:
                if name == "cam":
                    if cam is None:
                        continue
                    value, text = (1.0 if cam is CamResult.POSITIVE else 0.0), cam.value
                else:
                    value = float(rass if name == "rass" else gcs)
                    text = str(int(value))
                columns["minute"].append(moment)
                columns["name"].append(name)
                columns["value"].append(value)
                columns["unit"].append(unit)
                columns["text"].append(text)

    def _assessment_minute(
        self, rng: np.random.Generator, stay: StayPlan, start: float
    ) -> Optional[float]:
        end = start + SHIFT_MINUTES
        for admit, discharge in stay.intervals:
            low = max(start + SCORE_MARGIN_MINUTES, admit)
            high = min(end - SCORE_MARGIN_MINUTES, discharge)
            if low <= high:
                return float(rng.integers(int(np.ceil(low)), int(np.floor(high)) + 1))
            if start < discharge <= end:
                return float(discharge)
        return None


def generate(config: SynthConfig, seed: int, threads: int = 1) -> SyntheticCohort:
    """Generate a cohort; ``config.seed`` wins over ``seed`` when set."""
    return SyntheticCohortGenerator(config, seed, threads).generate()


def describe(cohort: SyntheticCohort) -> pd.DataFrame:
    """Summary statistics: class counts, stay length, events per stay, prevalences."""
    rows = []
    counts = cohort.labels["label"].value_counts() if len(cohort.labels) else pd.Series(dtype=int)
    for name in CLASS_NAMES:
        rows.append(("class_count", name, float(counts.get(name, 0))))
    total = float(len(cohort.labels))
    for name in CLASS_NAMES:
        share = float(counts.get(name, 0)) / total if total else 0.0
        rows.append(("class_prevalence", name, share))

    stays = len(cohort.los_minutes)
    rows.append(("cohort", "patients", float(cohort.encounters["patient_id"].nunique())))
    rows.append(("cohort", "encounters", float(len(cohort.encounters))))
    rows.append(("cohort", "stays", float(stays)))
    rows.append(
        (
            "cohort",
            "median_los_days",
            float(np.median(cohort.los_minutes)) / (24 * 60) if stays else 0.0,
        )
    )
    rows.append(("cohort", "events_per_stay", float(len(cohort.events)) / stays if stays else 0.0))

    if len(cohort.events):
        by_encounter = cohort.events.groupby("name")["encounter_id"].nunique()
        encounters = float(len(cohort.encounters))
        for spec in cohort.catalog:
            rows.append(("feature_prevalence", spec.name, float(by_encounter.get(spec.name, 0)) / encounters))
    else:
        for spec in cohort.catalog:
            rows.append(("feature_prevalence", spec.name, 0.0))
    return pd.DataFrame(rows, columns=["section", "name", "value"])
