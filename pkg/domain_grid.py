"""Rectangular container as a cell-centred grid, wall conditions and ghost closure."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from models import CONDITIONS, INWARD_NORMALS, WALLS, Grid, WallSpec, Walls
from potentials import EnergyModel

logger = logging.getLogger(__name__)

MIN_CELLS = 8
DIVISIBILITY_RTOL = 1e-9


class GridError(ValueError):
    pass


def build_grid(lx: float, ly: float, h: float) -> Grid:
    """Grid of (0, lx) x (0, ly) with spacing *h*; *h* must divide both extents."""
    if lx <= 0 or ly <= 0 or h <= 0:
        raise GridError(f"extents and spacing must be positive (lx={lx}, ly={ly}, h={h})")
    counts = []
    for extent in (lx, ly):
        n = int(round(extent / h))
        if n == 0 or abs(n * h - extent) > DIVISIBILITY_RTOL * extent:
            raise GridError(f"h={h} does not divide extent {extent}")
        counts.append(n)
    nx, ny = counts
    if min(nx, ny) < MIN_CELLS:
        raise GridError(f"grid {nx}x{ny} is degenerate (need at least {MIN_CELLS} cells per side)")
    return Grid(nx=nx, ny=ny, h=float(h))


# ---------------------------------------------------------------------------
# Wall sets
# ---------------------------------------------------------------------------

def make_walls(model: EnergyModel | None = None, contact: tuple[str, ...] = ()) -> Walls:
    """One WallSpec per wall; walls listed in *contact* carry *model*."""
    unknown = set(contact) - set(WALLS)
    if unknown:
        raise ValueError(f"unknown walls {sorted(unknown)}")
    if contact and model is None:
        raise ValueError("contact walls need an energy model")
    return tuple(
        WallSpec(wall, "contact", model) if wall in contact else WallSpec(wall, "neumann")
        for wall in WALLS
    )


def validate_walls(walls: Walls) -> None:
    names = [w.wall for w in walls]
    if sorted(names) != sorted(WALLS):
        raise ValueError(f"each wall needs exactly one condition, got {names}")
    for spec in walls:
        if spec.condition not in CONDITIONS:
            raise ValueError(f"unknown wall condition {spec.condition!r}")
        if spec.is_contact and spec.model is None:
            raise ValueError(f"contact wall {spec.wall} has no energy model")


def contact_walls(walls: Walls) -> list[WallSpec]:
    return [w for w in walls if w.is_contact]


def wall_cosines(walls: Walls) -> dict[str, float]:
    """cos(alpha) per wall, zero on Neumann walls."""
    return {
        w.wall: (w.model.cos_alpha if w.is_contact and w.model is not None else 0.0)
        for w in walls
    }


def wall_length(grid: Grid, wall: str) -> float:
    return grid.ly if wall in ("left", "right") else grid.lx


# ---------------------------------------------------------------------------
# Boundary faces
# ---------------------------------------------------------------------------

def wall_index(wall: str) -> tuple:
    """Index of the cells adjacent to *wall* in an (nx, ny) array."""
    return {
        "left": (0, slice(None)),
        "right": (-1, slice(None)),
        "bottom": (slice(None), 0),
        "top": (slice(None), -1),
    }[wall]


def face_centers(grid: Grid, wall: str) -> np.ndarray:
    """(n, 2) array of boundary face centres along *wall*."""
    if wall in ("left", "right"):
        x = 0.0 if wall == "left" else grid.lx
        return np.column_stack([np.full(grid.ny, x), grid.y])
    y = 0.0 if wall == "bottom" else grid.ly
    return np.column_stack([grid.x, np.full(grid.nx, y)])


def contact_face_counts(grid: Grid, walls: Walls) -> np.ndarray:
    """Number of contact-wall faces per cell (2 at contact corners)."""
    counts = np.zeros(grid.shape)
    for spec in contact_walls(walls):
        counts[wall_index(spec.wall)] += 1.0
    return counts


# ---------------------------------------------------------------------------
# Ghost closure
# ---------------------------------------------------------------------------

def ghost_value(u_in, wall: WallSpec, eps: float, h: float, u_prev_boundary):
    """Ghost value so that (u_in - u_ghost) / h = sigma'(u_prev_boundary) / eps.

    Neumann walls mirror *u_in*.
    """
    if not wall.is_contact or wall.model is None:
        return np.array(u_in, dtype=float, copy=True)
    return u_in - (h / eps) * wall.model.sigma_prime(u_prev_boundary)


def ghost_layer(
    u: np.ndarray,
    walls: Walls,
    eps: float,
    h: float,
    u_prev: np.ndarray | None = None,
) -> np.ndarray:
    """(nx + 2, ny + 2) array padded with ghost values; corners copy the corner cell."""
    if u_prev is None:
        u_prev = u
    padded = np.empty((u.shape[0] + 2, u.shape[1] + 2))
    padded[1:-1, 1:-1] = u
    ghost_slices = {
        "left": (0, slice(1, -1)),
        "right": (-1, slice(1, -1)),
        "bottom": (slice(1, -1), 0),
        "top": (slice(1, -1), -1),
    }
    for spec in walls:
        idx = wall_index(spec.wall)
        padded[ghost_slices[spec.wall]] = ghost_value(u[idx], spec, eps, h, u_prev[idx])
    padded[0, 0] = u[0, 0]
    padded[0, -1] = u[0, -1]
    padded[-1, 0] = u[-1, 0]
    padded[-1, -1] = u[-1, -1]
    return padded


def discrete_laplacian(
    u: np.ndarray,
    walls: Walls,
    eps: float,
    h: float,
    u_prev: np.ndarray | None = None,
) -> np.ndarray:
    """Five-point Laplacian closed by the ghost layer."""
    p = ghost_layer(u, walls, eps, h, u_prev)
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * u) / (h * h)


def _path_laplacian(n: int) -> sp.csr_matrix:
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = -np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def graph_laplacian(grid: Grid) -> sp.csr_matrix:
    """Neumann graph Laplacian G with (G u)_i = sum over neighbours of (u_i - u_j).

    Acts on C-ordered flattening of (nx, ny) arrays; -Laplacian = G / h^2.
    """
    lx = _path_laplacian(grid.nx)
    ly = _path_laplacian(grid.ny)
    return (sp.kron(lx, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), ly)).tocsr()


def wall_summary(walls: Walls) -> dict[str, str]:
    return {w.wall: w.condition for w in walls}


def inward_normal(wall: str) -> np.ndarray:
    return np.asarray(INWARD_NORMALS[wall])
