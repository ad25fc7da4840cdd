"""Versioned ``.npz`` checkpoints: float64 tensors plus a JSON metadata record."""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
from zipfile import BadZipFile

import numpy as np

from src.core.exceptions import CheckpointError, MissingInputError, VocabularyMismatchError

CHECKPOINT_VERSION = 1
META_KEY = "__meta__"
PARAM_PREFIX = "param/"


def save_checkpoint(path: Path, params: Dict[str, np.ndarray], meta: Dict[str, Any]) -> Path:
    """Write tensors and metadata atomically; returns ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {"version": CHECKPOINT_VERSION, **meta}
    arrays = {f"{PARAM_PREFIX}{name}": np.asarray(value, dtype=np.float64) for name, value in params.items()}
    arrays[META_KEY] = np.array(json.dumps(record, sort_keys=True))
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as handle:
        np.savez(handle, **arrays)
    os.replace(tmp_path, path)
    return path


def load_checkpoint(
    path: Path, expected_vocabulary_hash: Optional[str] = None
) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        MissingInputError: If the file does not exist.
        CheckpointError: If it is unreadable or of another version.
        VocabularyMismatchError: If ``expected_vocabulary_hash`` differs from the stored one.
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(str(archive[META_KEY]))
            params = {
                key[len(PARAM_PREFIX):]: archive[key].copy()
                for key in archive.files
                if key.startswith(PARAM_PREFIX)
            }
    except (OSError, ValueError, KeyError, BadZipFile) as exc:
        raise CheckpointError(f"Cannot read checkpoint {path}: {exc}") from exc

    if meta.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {meta.get('version')}")
    stored = meta.get("vocabulary_hash")
    if expected_vocabulary_hash is not None and stored != expected_vocabulary_hash:
        raise VocabularyMismatchError(
            f"Checkpoint vocabulary {stored} does not match dataset vocabulary {expected_vocabulary_hash}"
        )
    return params, meta
