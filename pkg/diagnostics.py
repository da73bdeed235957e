"""Localized energies, relative entropies and defect functionals of a phase field."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from domain_grid import contact_walls, face_centers, wall_index
from models import MAX_ABS_TOL, DefectReport, Grid, PhaseField, Walls
from potentials import DoubleWell, eval_psi

logger = logging.getLogger(__name__)

FALLBACK_NORMAL = (1.0, 0.0)
GRADIENT_FLOOR = 1e-14
XI_NORM_TOL = 1e-12
XI_BOUNDARY_TOL = 1e-10

_W = DoubleWell()

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
Weight = Union[ScalarField, np.ndarray, float]


class PhaseFieldRangeError(ValueError):
    pass


class AdmissibilityError(ValueError):
    pass


@dataclass(frozen=True)
class TestFieldPair:
    """Weight ``eta(x, y)`` and vector field ``xi(x, y) -> (2, ...)``."""

    __test__ = False  # not a pytest class

    eta: ScalarField
    xi: VectorField
    name: str = "pair"

    def eta_at(self, x, y) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.eta(x, y), dtype=float), np.shape(x))

    def xi_at(self, x, y) -> np.ndarray:
        shape = np.shape(x)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in self.xi(x, y)])


def constant_pair(xi: tuple[float, float], eta: float = 1.0) -> TestFieldPair:
    vec = np.asarray(xi, dtype=float)
    return TestFieldPair(
        eta=lambda x, y: np.full(np.shape(x), eta),
        xi=lambda x, y: vec.reshape(2, *([1] * np.ndim(x))) * np.ones((2,) + np.shape(x)),
        name=f"constant{tuple(vec)}",
    )


def check_admissible(pair: TestFieldPair, grid: Grid, walls: Walls) -> tuple[float, float]:
    """Return (max |xi| - 1, max boundary violation); raise if either exceeds tolerance."""
    X, Y = grid.mesh()
    norm_excess = float(np.max(np.linalg.norm(pair.xi_at(X, Y), axis=0)) - 1.0)
    boundary = 0.0
    for spec in walls:
        pts = face_centers(grid, spec.wall)
        xi = pair.xi_at(pts[:, 0], pts[:, 1])
        normal = np.asarray(spec.inward_normal)
        target = spec.model.cos_alpha if spec.is_contact else 0.0
        boundary = max(boundary, float(np.max(np.abs(normal @ xi - target))))
    if norm_excess > XI_NORM_TOL or boundary > XI_BOUNDARY_TOL:
        raise AdmissibilityError(
            f"test pair {pair.name!r} not admissible: |xi|-1={norm_excess:.3g}, "
            f"boundary violation={boundary:.3g}"
        )
    return norm_excess, boundary


# ---------------------------------------------------------------------------
# Discrete building blocks
# ---------------------------------------------------------------------------

def _cell_weight(eta: Weight, grid: Grid) -> np.ndarray:
    if callable(eta):
        X, Y = grid.mesh()
        return np.broadcast_to(np.asarray(eta(X, Y), dtype=float), grid.shape)
    return np.broadcast_to(np.asarray(eta, dtype=float), grid.shape)


def _face_weight(eta: Weight, grid: Grid, wall: str) -> np.ndarray:
    pts = face_centers(grid, wall)
    n = pts.shape[0]
    if callable(eta):
        return np.broadcast_to(np.asarray(eta(pts[:, 0], pts[:, 1]), dtype=float), (n,))
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        return np.full(n, float(eta))
    return eta[wall_index(wall)]


def gradient_sq(u: np.ndarray, h: float) -> np.ndarray:
    """|grad u|^2 per cell: half the sum of squared differences over its interior faces."""
    out = np.zeros_like(u, dtype=float)
    dx2 = np.diff(u, axis=0) ** 2
    dy2 = np.diff(u, axis=1) ** 2
    out[:-1, :] += dx2
    out[1:, :] += dx2
    out[:, :-1] += dy2
    out[:, 1:] += dy2
    return 0.5 * out / (h * h)


def energy_density(u: np.ndarray, h: float, eps: float) -> np.ndarray:
    return 0.5 * eps * gradient_sq(u, h) + _W(u) / eps


def psi_gradient_norm(u: np.ndarray, h: float) -> np.ndarray:
    """|grad psi(u)| by the chain rule sqrt(2 W(u)) |grad u|."""
    return np.sqrt(2.0 * _W(np.clip(u, -1.0, 1.0))) * np.sqrt(gradient_sq(u, h))


def _check_range(state: PhaseField) -> None:
    worst = float(np.max(np.abs(state.values)))
    if worst > 1.0 + MAX_ABS_TOL:
        raise PhaseFieldRangeError(f"|u| reaches {worst:.12g} > 1")


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------

def localized_energy(state: PhaseField, eta: Weight, walls: Walls = ()) -> float:
    """E_eps(u; eta): weighted bulk density plus weighted sigma(u) on contact faces."""
    grid, u = state.grid, state.values
    bulk = grid.h**2 * float(np.sum(_cell_weight(eta, grid) * energy_density(u, grid.h, state.eps)))
    boundary = 0.0
    for spec in contact_walls(walls):
        weight = _face_weight(eta, grid, spec.wall)
        boundary += grid.h * float(np.sum(weight * spec.model.sigma(u[wall_index(spec.wall)])))
    return bulk + boundary


def _boundary_offset(grid: Grid, eta: Weight, walls: Walls) -> float:
    total = 0.0
    for spec in contact_walls(walls):
        floor = spec.model.sigma_floor
        if floor:
            total += grid.h * floor * float(np.sum(_face_weight(eta, grid, spec.wall)))
    return total


def phase_field_normal(
    state: PhaseField, fallback: tuple[float, float] = FALLBACK_NORMAL
) -> np.ndarray:
    """Unit field grad u / |grad u| of shape (2, nx, ny), *fallback* where the gradient vanishes."""
    gx, gy = np.gradient(state.values, state.grid.h)
    norm = np.hypot(gx, gy)
    flat = norm <= GRADIENT_FLOOR
    safe = np.where(flat, 1.0, norm)
    nu = np.stack([gx / safe, gy / safe])
    nu[0][flat] = fallback[0]
    nu[1][flat] = fallback[1]
    return nu


def _interior_face_fluxes(pair: TestFieldPair, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """eta * xi at interior vertical faces (x-component) and horizontal faces (y-component)."""
    h = grid.h
    xf, yc = np.meshgrid((np.arange(1, grid.nx)) * h, grid.y, indexing="ij")
    xc, yf = np.meshgrid(grid.x, (np.arange(1, grid.ny)) * h, indexing="ij")
    fx = pair.eta_at(xf, yc) * pair.xi_at(xf, yc)[0]
    fy = pair.eta_at(xc, yf) * pair.xi_at(xc, yf)[1]
    return fx, fy


def relative_entropy_primal(state: PhaseField, pair: TestFieldPair, walls: Walls = ()) -> float:
    """E_eps(u; eta) - int eta (xi . grad) psi(u) - int_wall eta cos(alpha) psi(u)."""
    grid, u = state.grid, state.values
    h = grid.h
    psi = eval_psi(u)
    fx, fy = _interior_face_fluxes(pair, grid)
    transport = h * (float(np.sum(fx * np.diff(psi, axis=0))) + float(np.sum(fy * np.diff(psi, axis=1))))
    wall_term = 0.0
    for spec in contact_walls(walls):
        weight = _face_weight(pair.eta, grid, spec.wall)
        wall_term += h * spec.model.cos_alpha * float(np.sum(weight * psi[wall_index(spec.wall)]))
    energy = localized_energy(state, pair.eta, walls) - _boundary_offset(grid, pair.eta, walls)
    return energy - transport - wall_term


def relative_entropy_phasefield(state: PhaseField, pair: TestFieldPair, walls: Walls = ()) -> float:
    """E_eps(u; eta) + int psi(u) div(eta xi), the integration-by-parts representation.

    The discrete divergence uses eta * xi at all cell faces, including the walls.
    """
    grid, u = state.grid, state.values
    h = grid.h
    fx, fy = _interior_face_fluxes(pair, grid)
    div = np.zeros(grid.shape)
    div[:-1, :] += fx
    div[1:, :] -= fx
    div[:, :-1] += fy
    div[:, 1:] -= fy
    for wall, component, sign in (("left", 0, -1.0), ("right", 0, 1.0), ("bottom", 1, -1.0), ("top", 1, 1.0)):
        pts = face_centers(grid, wall)
        flux = pair.eta_at(pts[:, 0], pts[:, 1]) * pair.xi_at(pts[:, 0], pts[:, 1])[component]
        div[wall_index(wall)] += sign * flux
    div /= h
    energy = localized_energy(state, pair.eta, walls) - _boundary_offset(grid, pair.eta, walls)
    return energy + h * h * float(np.sum(eval_psi(u) * div))


def defects(state: PhaseField, pair: TestFieldPair, walls: Walls = ()) -> DefectReport:
    """Equipartition defect, boundary defect and tilt excess for an admissible pair."""
    _check_range(state)
    grid, u, eps = state.grid, state.values, state.eps
    h = grid.h
    X, Y = grid.mesh()
    eta = pair.eta_at(X, Y)
    xi = pair.xi_at(X, Y)

    grad = np.sqrt(gradient_sq(u, h))
    root_w = np.sqrt(2.0 * _W(np.clip(u, -1.0, 1.0)))
    equipartition = 0.5 * h * h * float(np.sum(eta * (np.sqrt(eps) * grad - root_w / np.sqrt(eps)) ** 2))

    nu = phase_field_normal(state)
    grad_psi = psi_gradient_norm(u, h)
    tilt = 0.5 * h * h * float(np.sum(eta * np.sum((nu - xi) ** 2, axis=0) * grad_psi))

    boundary = 0.0
    for spec in contact_walls(walls):
        model = spec.model
        adjacent = u[wall_index(spec.wall)]
        density = model.sigma(adjacent) - model.sigma_floor - model.cos_alpha * eval_psi(adjacent)
        boundary += h * float(np.sum(_face_weight(pair.eta, grid, spec.wall) * density))

    for label, value in (("equipartition", equipartition), ("boundary", boundary), ("tilt", tilt)):
        if value < -1e-10:
            logger.warning("%s defect negative beyond quadrature tolerance: %.3g", label, value)

    return DefectReport(
        equipartition=equipartition,
        boundary_defect=boundary,
        tilt_excess=tilt,
        psi=eval_psi(u),
        normal=nu,
        relative_entropy=relative_entropy_primal(state, pair, walls),
    )


def diagnostics_row(state: PhaseField, pair: TestFieldPair, walls: Walls = ()) -> dict[str, float]:
    report = defects(state, pair, walls)
    return {
        "t": state.t,
        "equipartition": report.equipartition,
        "boundary_defect": report.boundary_defect,
        "tilt_excess": report.tilt_excess,
        "rel_entropy_primal": report.relative_entropy,
        "rel_entropy_ibp": relative_entropy_phasefield(state, pair, walls),
    }
