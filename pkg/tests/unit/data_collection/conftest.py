"""Fixtures for the ETL tests."""

import numpy as np
import pandas as pd
import pytest

from src.models.domain.encounter import RawEncounter, VariableKind, VariableSpec

ADMIT = pd.Timestamp("2021-03-01 07:00")


def make_encounter(
    patient_id="P1",
    encounter_id="E1",
    admit=ADMIT,
    hours=48,
    events=None,
    static=None,
    death=None,
):
    """An encounter with RASS/CAM every six hours and hourly heart rate unless given events."""
    discharge = admit + pd.Timedelta(hours=hours)
    if events is None:
        rows = []
        for minute in range(0, int(hours * 60), 360):
            time = admit + pd.Timedelta(minutes=minute)
            rows.append((time, "rass", 0.0, "score"))
            rows.append((time, "cam", 0.0, "result"))
        for minute in range(30, int(hours * 60), 60):
            rows.append((admit + pd.Timedelta(minutes=minute), "heart_rate", 80.0 + minute % 7, "bpm"))
        events = pd.DataFrame(rows, columns=["time", "name", "value", "unit"])
        events = events.sort_values(["time", "name"], kind="mergesort").reset_index(drop=True)
    return RawEncounter(
        patient_id=patient_id,
        encounter_id=encounter_id,
        admit_time=admit,
        discharge_time=discharge,
        death_time=death,
        static=static if static is not None else {"age": "70", "sex": "M"},
        events=events,
    )


@pytest.fixture
def catalog():
    return [
        VariableSpec("heart_rate", VariableKind.VITAL, "bpm"),
        VariableSpec("sbp", VariableKind.VITAL, "mmhg"),
        VariableSpec("lactate", VariableKind.LAB, "mmol/l"),
        VariableSpec("propofol", VariableKind.MEDICATION, "mcg/kg/min"),
        VariableSpec("rass", VariableKind.SCORE, "score"),
        VariableSpec("cam", VariableKind.SCORE, "result"),
        VariableSpec("gcs", VariableKind.SCORE, "score"),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(7)
