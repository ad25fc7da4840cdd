"""Run manifests: what a command consumed, produced and how long it took."""

import hashlib
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from src.core.config import TOOL_VERSION
from src.core.exceptions import InputValidationError, MissingInputError

MANIFEST_NAME = "manifest.json"


def file_digest(path: Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def canonical_hash(payload: Any) -> str:
    """SHA-256 of the canonical JSON form of ``payload``."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_json_atomic(path: Path, payload: Any) -> None:
    """Write JSON next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


@dataclass
class RunManifest:
    """Record of one CLI command run."""

    command: str
    config_hash: str
    seed: int
    tool_version: str = TOOL_VERSION
    input_digests: Dict[str, str] = field(default_factory=dict)
    output_digests: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    funnel: Dict[str, int] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def record_inputs(self, paths: Iterable[Path]) -> None:
        for path in paths:
            self.input_digests[Path(path).name] = file_digest(Path(path))

    def record_outputs(self, paths: Iterable[Path]) -> None:
        for path in paths:
            self.output_digests[Path(path).name] = file_digest(Path(path))

    def mark(self, stage: str) -> None:
        """Store seconds elapsed since the manifest was created under ``stage``."""
        self.timings[stage] = round(time.perf_counter() - self._started, 3)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("_started")
        return data

    def write(self, out_dir: Path) -> Path:
        """Write the manifest atomically as the last act of a command."""
        self.mark("total")
        path = Path(out_dir) / MANIFEST_NAME
        write_json_atomic(path, self.to_dict())
        return path


def read_manifest(directory: Path) -> Optional[Dict[str, Any]]:
    """Load ``manifest.json`` from ``directory`` if one exists."""
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def verify_digests(directory: Path, manifest: Dict[str, Any]) -> None:
    """Check that every output recorded in ``manifest`` still matches its digest."""
    for name, digest in manifest.get("output_digests", {}).items():
        path = Path(directory) / name
        if not path.exists():
            raise MissingInputError(str(path))
        if file_digest(path) != digest:
            raise InputValidationError(
                f"{path} does not match the digest recorded in its manifest"
            )
