"""Shift-level brain-acuity phenotyping from RASS, CAM and GCS streams."""

from src.services.phenotype.labeler import (
    StayScores,
    carry_forward,
    label_scores_frame,
    label_shift,
    label_stay,
    snapshot_at,
)

__all__ = [
    "StayScores",
    "carry_forward",
    "label_scores_frame",
    "label_shift",
    "label_stay",
    "snapshot_at",
]
