from __future__ import annotations

import numpy as np
import pytest

import cache
from cache import CacheError, RunCache, read_checkpoint, write_checkpoint
from domain_grid import build_grid, make_walls
from models import PhaseField, SolverConfig
from solver import run

EPS = 0.25
TAU = EPS**2 / 4


@pytest.fixture
def small_state(rng):
    grid = build_grid(1.0, 1.0, 1.0 / 16)
    return PhaseField(rng.uniform(-1.0, 1.0, grid.shape), grid, eps=EPS)


def test_checkpoint_roundtrip(tmp_path, small_state):
    path = tmp_path / "snap.parquet"
    write_checkpoint(path, small_state)
    loaded = read_checkpoint(path)
    np.testing.assert_array_equal(loaded.values, small_state.values)
    assert loaded.grid == small_state.grid
    assert loaded.eps == EPS


def test_checkpoint_without_metadata_is_rejected(tmp_path):
    import pyarrow as pa
    import pyarrow.parquet as pq

    path = tmp_path / "bare.parquet"
    pq.write_table(pa.table({"u": np.zeros(4)}), path)
    with pytest.raises(CacheError):
        read_checkpoint(path)


def test_second_request_is_served_from_cache(tmp_path, small_state, monkeypatch):
    store = RunCache(tmp_path)
    walls = make_walls()
    cfg = SolverConfig(tau=TAU, t_end=4 * TAU)
    first = store.get_or_run("abc", small_state, cfg, walls)

    def fail(*args, **kwargs):
        raise AssertionError("solver should not run on a cache hit")

    monkeypatch.setattr(cache, "run", fail)
    second = store.get_or_run("abc", small_state, cfg, walls)
    np.testing.assert_array_equal(second.final.values, first.final.values)
    assert len(second.ledger) == len(first.ledger)


def test_longer_request_resumes_from_last_checkpoint(tmp_path, small_state):
    store = RunCache(tmp_path)
    walls = make_walls()
    store.get_or_run("resume", small_state, SolverConfig(tau=TAU, t_end=0.0625), walls)
    resumed = store.get_or_run("resume", small_state, SolverConfig(tau=TAU, t_end=0.125), walls)
    direct = run(small_state, SolverConfig(tau=TAU, t_end=0.125), walls)

    assert resumed.ledger["step"].tolist() == list(range(9))
    np.testing.assert_allclose(resumed.final.values, direct.final.values, atol=1e-12)
    np.testing.assert_allclose(resumed.ledger["E_eps"], direct.ledger["E_eps"], rtol=1e-12)


def test_clear_removes_checkpoints(tmp_path, small_state):
    store = RunCache(tmp_path)
    store.get_or_run("gone", small_state, SolverConfig(tau=TAU, t_end=2 * TAU), make_walls())
    assert store.clear("gone") == 3
    assert store.clear("gone") == 0
