from __future__ import annotations

import math

import numpy as np
import pytest

from config import ExperimentConfig
from domain_grid import build_grid, make_walls
from models import PhaseField
from potentials import EnergyModel
from solver import well_prepared


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def unit_grid():
    return build_grid(1.0, 1.0, 1.0 / 32.0)


@pytest.fixture
def neumann_walls():
    return make_walls()


@pytest.fixture
def model_60() -> EnergyModel:
    return EnergyModel.from_angle(math.pi / 3)


@pytest.fixture
def random_state(unit_grid, rng) -> PhaseField:
    return PhaseField(rng.uniform(-1.0, 1.0, unit_grid.shape), unit_grid, eps=0.125)


def _disk_state(grid, eps: float, center: tuple[float, float], radius: float, t: float = 0.0) -> PhaseField:
    X, Y = grid.mesh()
    sd = np.hypot(X - center[0], Y - center[1]) - radius
    return well_prepared(grid, eps, sd, t=t)


def _line_state(grid, eps: float, point: tuple[float, float], normal: tuple[float, float]) -> PhaseField:
    """Straight interface through *point*; A lies on the side *normal* points to."""
    X, Y = grid.mesh()
    sd = -((X - point[0]) * normal[0] + (Y - point[1]) * normal[1])
    return well_prepared(grid, eps, sd)


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """Point output and cache directories at a temporary tree."""
    monkeypatch.setenv("PHASEFIELD_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("PHASEFIELD_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("PHASEFIELD_THREADS", "1")
    return tmp_path


CHORD_INI = """
[domain]
lx = 1.0
ly = 1.0
h = 0.025
[walls]
bottom = contact
top = contact
[model]
alpha_deg = 90
[phase_field]
eps = 0.1
[solver]
scheme = convex_splitting
tau = 0.0025
t_end = 0.025
[initial]
geometry = chord
x0 = 0.5
[output]
name = tiny-chord
"""

HALF_DISK_INI = """
[domain]
lx = 1.0
ly = 0.5
h = 0.01
[phase_field]
eps = 0.04
[solver]
scheme = convex_splitting
tau = 0.0004
t_end = 0.004
[initial]
geometry = half_disk
radius = 0.3
center_x = 0.5
[output]
name = tiny-half-disk
"""


@pytest.fixture
def make_disk():
    return _disk_state


@pytest.fixture
def make_line():
    return _line_state


@pytest.fixture
def chord_ini(tmp_path):
    path = tmp_path / "chord.ini"
    path.write_text(CHORD_INI)
    return path


@pytest.fixture
def chord_config():
    return ExperimentConfig.from_text(CHORD_INI)


@pytest.fixture
def half_disk_config():
    return ExperimentConfig.from_text(HALF_DISK_INI)
