from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from models import SCHEMA_VERSION, Grid, PhaseField, SolverConfig, Trajectory, Walls
from solver import run

logger = logging.getLogger(__name__)

_META_KEYS = ("nx", "ny", "h", "eps", "t", "schema_version")


class CacheError(RuntimeError):
    pass


def write_checkpoint(path: Path, state: PhaseField) -> None:
    """Write *state* as one float64 column ``u`` (C order) with grid metadata."""
    table = pa.table({"u": np.ascontiguousarray(state.values, dtype=float).ravel()})
    meta = {
        "nx": state.grid.nx,
        "ny": state.grid.ny,
        "h": state.grid.h,
        "eps": state.eps,
        "t": state.t,
        "schema_version": SCHEMA_VERSION,
    }
    table = table.replace_schema_metadata({k: json.dumps(v) for k, v in meta.items()})
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    pq.write_table(table, tmp)
    os.replace(tmp, path)


def read_checkpoint(path: Path) -> PhaseField:
    table = pq.read_table(path)
    raw = table.schema.metadata or {}
    try:
        meta = {k: json.loads(raw[k.encode()]) for k in _META_KEYS}
    except KeyError as exc:
        raise CacheError(f"checkpoint {path} lacks metadata {exc}") from exc
    if meta["schema_version"] != SCHEMA_VERSION:
        raise CacheError(f"checkpoint {path} has schema version {meta['schema_version']}")
    grid = Grid(nx=int(meta["nx"]), ny=int(meta["ny"]), h=float(meta["h"]))
    values = table.column("u").to_numpy().reshape(grid.shape)
    return PhaseField(values=values, grid=grid, eps=float(meta["eps"]), t=float(meta["t"]))


class RunCache:
    """Parquet checkpoints of trajectories, keyed by a config digest.

    A request for a later end time resumes from the last stored snapshot and
    integrates only the missing interval.
    """

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _run_dir(self, digest: str) -> Path:
        return self.cache_dir / "checkpoints" / digest

    def _ledger_path(self, digest: str) -> Path:
        return self._run_dir(digest) / "ledger.parquet"

    def _snapshot_paths(self, digest: str) -> list[Path]:
        directory = self._run_dir(digest)
        if not directory.exists():
            return []
        return sorted(directory.glob("step_*.parquet"))

    def _load_cached(self, digest: str) -> tuple[list[PhaseField], pd.DataFrame] | None:
        paths = self._snapshot_paths(digest)
        ledger_path = self._ledger_path(digest)
        if not paths or not ledger_path.exists():
            return None
        try:
            snapshots = [read_checkpoint(p) for p in paths]
            ledger = pd.read_parquet(ledger_path, engine="pyarrow")
        except (CacheError, OSError, pa.ArrowException) as exc:
            logger.warning("ignoring unreadable cache %s: %s", digest, exc)
            return None
        snapshots.sort(key=lambda s: s.t)
        return snapshots, ledger

    def _save(self, digest: str, trajectory: Trajectory) -> None:
        directory = self._run_dir(digest)
        directory.mkdir(parents=True, exist_ok=True)
        steps = trajectory.ledger.set_index("t")["step"]
        for snap in trajectory.snapshots:
            step = int(steps.iloc[np.argmin(np.abs(steps.index.to_numpy() - snap.t))])
            path = directory / f"step_{step:08d}.parquet"
            if not path.exists():
                write_checkpoint(path, snap)
        tmp = self._ledger_path(digest).with_suffix(".tmp")
        trajectory.ledger.to_parquet(tmp, engine="pyarrow", index=False)
        os.replace(tmp, self._ledger_path(digest))

    def get_or_run(
        self,
        digest: str,
        u0: PhaseField,
        cfg: SolverConfig,
        walls: Walls,
        progress: Callable[[int, int], None] | None = None,
    ) -> Trajectory:
        """Return the trajectory up to ``cfg.t_end``, integrating only what is missing."""
        cached = self._load_cached(digest)
        tol = 1e-9 * cfg.tau

        if cached is not None:
            snapshots, ledger = cached
            last = snapshots[-1]
            if last.t >= cfg.t_end - tol:
                logger.info("cache hit for %s up to t=%.4g", digest, last.t)
                keep = [s for s in snapshots if s.t <= cfg.t_end + cfg.tau]
                return Trajectory(
                    grid=last.grid,
                    eps=last.eps,
                    walls=walls,
                    snapshots=[s.frozen_copy() for s in keep],
                    ledger=ledger[ledger["t"] <= keep[-1].t + tol].reset_index(drop=True),
                    config=cfg,
                    max_abs=max(float(np.max(np.abs(s.values))) for s in keep),
                )
            logger.info("resuming %s from t=%.4g", digest, last.t)
            tail = run(last, cfg, walls, progress=progress)
            new_rows = tail.ledger.iloc[1:].copy()
            new_rows["step"] += int(ledger["step"].iloc[-1])
            merged = Trajectory(
                grid=tail.grid,
                eps=tail.eps,
                walls=walls,
                snapshots=[s.frozen_copy() for s in snapshots] + tail.snapshots[1:],
                ledger=pd.concat([ledger, new_rows], ignore_index=True),
                config=cfg,
                max_abs=max(tail.max_abs, max(float(np.max(np.abs(s.values))) for s in snapshots)),
            )
            self._save(digest, merged)
            return merged

        trajectory = run(u0, cfg, walls, progress=progress)
        self._save(digest, trajectory)
        return trajectory

    def clear(self, digest: str) -> int:
        removed = 0
        for path in self._snapshot_paths(digest):
            path.unlink()
            removed += 1
        if self._ledger_path(digest).exists():
            self._ledger_path(digest).unlink()
        return removed
