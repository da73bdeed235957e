"""Atomic CSV / JSON writers for run outputs."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from models import SCHEMA_VERSION


def _atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(path: Path, frame: pd.DataFrame, columns: list[str] | None = None) -> Path:
    """Write *frame* with a leading ``schema_version`` column."""
    frame = frame.copy()
    if columns is not None:
        frame = frame[[c for c in columns if c in frame.columns]]
    frame.insert(0, "schema_version", SCHEMA_VERSION)
    return _atomic_write_text(path, frame.to_csv(index=False))


def read_csv(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if "schema_version" in frame.columns:
        versions = set(frame["schema_version"].unique())
        if versions - {SCHEMA_VERSION}:
            raise ValueError(f"{path}: unsupported schema_version {sorted(versions)}")
    return frame


def write_json(path: Path, payload: dict) -> Path:
    body = {"schema_version": SCHEMA_VERSION, **_jsonable(payload)}
    return _atomic_write_text(path, json.dumps(body, indent=2, sort_keys=False) + "\n")


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def write_text(path: Path, text: str) -> Path:
    return _atomic_write_text(path, text)
