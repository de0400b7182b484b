"""Deterministic output helpers: float formatting, CSV/JSON writers, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__


def format_float(x: float) -> str:
    """17 significant digits, enough for an exact round trip."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable(asdict(obj))
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_digest(config: Mapping) -> str:
    """SHA-256 of the key-sorted compact JSON form; independent of key order."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def write_json(path: Path | str, obj: Any) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n")


def write_csv(path: Path | str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


@dataclass
class RunManifest:
    command: str
    config_digest: str
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    outputs: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @classmethod
    def for_config(cls, command: str, config: Mapping, outputs: Sequence[str] = ()) -> "RunManifest":
        return cls(command=command, config_digest=config_digest(config), outputs=list(outputs), config=dict(config))

    def write(self, path: Path | str) -> None:
        write_json(path, asdict(self))

    @classmethod
    def read(cls, path: Path | str) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))
