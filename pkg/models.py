from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

if TYPE_CHECKING:
    from potentials import EnergyModel


SCHEMA_VERSION = 1

# Wall identifiers and their inward unit normals
WALLS = ("left", "right", "bottom", "top")
INWARD_NORMALS = {
    "left": (1.0, 0.0),
    "right": (-1.0, 0.0),
    "bottom": (0.0, 1.0),
    "top": (0.0, -1.0),
}
CONDITIONS = ("contact", "neumann")

# Maximum principle tolerance for |u|
MAX_ABS_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on (0, nx*h) x (0, ny*h)."""

    nx: int
    ny: int
    h: float

    @property
    def lx(self) -> float:
        return self.nx * self.h

    @property
    def ly(self) -> float:
        return self.ny * self.h

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.h

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates with ``indexing="ij"`` (x index first)."""
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True)
class WallSpec:
    wall: str
    condition: str = "neumann"
    model: EnergyModel | None = None

    @property
    def is_contact(self) -> bool:
        return self.condition == "contact"

    @property
    def inward_normal(self) -> tuple[float, float]:
        return INWARD_NORMALS[self.wall]


Walls = tuple[WallSpec, ...]


@dataclass(frozen=True)
class PhaseField:
    values: np.ndarray
    grid: Grid
    eps: float
    t: float = 0.0

    def frozen_copy(self) -> PhaseField:
        """Return a read-only copy, safe to hand to diagnostics."""
        values = np.array(self.values, dtype=float, copy=True)
        values.flags.writeable = False
        return PhaseField(values=values, grid=self.grid, eps=self.eps, t=self.t)


@dataclass(frozen=True)
class SolverConfig:
    tau: float
    t_end: float
    scheme: str = "convex_splitting"
    stabilization: float = 2.0
    snapshot_stride: int | None = None


@dataclass
class Trajectory:
    grid: Grid
    eps: float
    walls: Walls
    snapshots: list[PhaseField]
    ledger: pd.DataFrame
    config: SolverConfig
    max_abs: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def initial(self) -> PhaseField:
        return self.snapshots[0]

    @property
    def final(self) -> PhaseField:
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# Sharp interface containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polyline:
    """One connected piece of the extracted interface.

    *normals* are unit inner normals of the phase A = {psi(u) > c0/2}; A lies
    to the left when walking the vertices in order.
    """

    vertices: np.ndarray
    normals: np.ndarray
    closed: bool = False

    @property
    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        if self.closed:
            return self.vertices, np.roll(self.vertices, -1, axis=0)
        return self.vertices[:-1], self.vertices[1:]

    @property
    def length(self) -> float:
        start, end = self.segments
        return float(np.linalg.norm(end - start, axis=1).sum())


@dataclass(frozen=True)
class ContactPoint:
    x: float
    y: float
    wall: str
    component: int
    at_start: bool


@dataclass(frozen=True)
class InterfaceCurve:
    t: float
    h: float
    eps: float
    lx: float
    ly: float
    components: list[Polyline] = field(default_factory=list)
    contact_points: list[ContactPoint] = field(default_factory=list)
    interior_length: float = 0.0
    wetted: dict[str, float] = field(default_factory=dict)
    wetted_intervals: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    area: float = 0.0
    cell_mask: np.ndarray | None = None

    @property
    def is_empty(self) -> bool:
        return not self.components

    @property
    def wetted_length(self) -> float:
        return float(sum(self.wetted.values()))


@dataclass(frozen=True)
class VelocitySample:
    x: float
    y: float
    V: float
    component: int
    vertex_index: int


@dataclass(frozen=True)
class DefectReport:
    equipartition: float
    boundary_defect: float
    tilt_excess: float
    psi: np.ndarray
    normal: np.ndarray
    relative_entropy: float = 0.0


@dataclass
class StabilityReport:
    """Per-snapshot time series of energies, errors and measured geometry."""

    frame: pd.DataFrame

    def series(self, column: str) -> np.ndarray:
        return self.frame[column].to_numpy(dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.series("t")

    def validate(self) -> None:
        t = self.times
        if np.any(np.diff(t) <= 0):
            raise ValueError("stability series time stamps are not increasing")
        numeric = self.frame.select_dtypes("number").to_numpy(dtype=float)
        if not np.all(np.isfinite(numeric)):
            raise ValueError("stability series contains non-finite entries")


# Documented CSV headers (schema_version is prepended on write)
LEDGER_COLUMNS = [
    "step",
    "t",
    "E_eps",
    "bulk_E",
    "boundary_E",
    "dissipation_increment",
    "numerical_dissipation",
]
DIAGNOSTICS_COLUMNS = [
    "t",
    "equipartition",
    "boundary_defect",
    "tilt_excess",
    "rel_entropy_primal",
    "rel_entropy_ibp",
]
INTERFACE_COLUMNS = ["t", "component", "vertex_index", "x", "y", "nu_x", "nu_y", "V"]
STABILITY_COLUMNS = [
    "t",
    "E_eps",
    "E_sharp",
    "rel_entropy",
    "bulk_error",
    "gronwall_rhs_relEn",
    "gronwall_rhs_bulk",
    "motion_law_residual",
    "contact_angle",
    "measured_radius",
    "measured_speed",
]
CONVERGENCE_COLUMNS = [
    "eps",
    "h",
    "contact_angle_error",
    "radius_or_speed_error",
    "energy_gap",
    "motion_law_residual",
    "equipartition",
    "boundary_defect",
    "rel_entropy",
    "bulk_error",
]
