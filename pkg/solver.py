"""Semi-implicit Allen-Cahn integrator with nonlinear Robin contact closure.

The discrete energy is

    E = eps/2 * sum_faces (u_i - u_j)^2 + h^2/eps * sum_cells W(u)
        + h * sum_contact_faces sigma(u_adjacent)

and one step solves a symmetric positive definite system

    (1 + tau S / eps^2) u+ + tau/h^2 G u+ + tau/(eps h) S_b N u+ = rhs(u)

where G is the Neumann graph Laplacian and N counts contact faces per cell.
"""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from domain_grid import (
    contact_face_counts,
    contact_walls,
    discrete_laplacian,
    graph_laplacian,
    validate_walls,
    wall_index,
)
from models import LEDGER_COLUMNS, MAX_ABS_TOL, Grid, PhaseField, SolverConfig, Trajectory, Walls
from potentials import DoubleWell, optimal_profile

logger = logging.getLogger(__name__)

SCHEMES = ("convex_splitting", "stabilized")
CONVEX_SPLITTING_S = 4.0
MIN_STABILIZATION = 2.0
MAX_SNAPSHOTS = 200
CG_RTOL = 1e-12
ENERGY_RTOL = 1e-8

_W = DoubleWell()


class StabilityCapError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------

def energy_parts(u: np.ndarray, grid: Grid, eps: float, walls: Walls) -> tuple[float, float]:
    """(bulk, boundary) parts of the discrete energy.

    sigma is evaluated at the cell next to each contact face, the same value
    the Robin ghost closure and the step system use.
    """
    h = grid.h
    dx = np.diff(u, axis=0)
    dy = np.diff(u, axis=1)
    gradient = 0.5 * eps * (float(np.sum(dx * dx)) + float(np.sum(dy * dy)))
    potential = (h * h / eps) * float(np.sum(_W(u)))
    boundary = 0.0
    for spec in contact_walls(walls):
        boundary += h * float(np.sum(spec.model.sigma(u[wall_index(spec.wall)])))
    return gradient + potential, boundary


def discrete_energy(state: PhaseField, walls: Walls) -> float:
    bulk, boundary = energy_parts(state.values, state.grid, state.eps, walls)
    return bulk + boundary


def allen_cahn_rhs(state: PhaseField, walls: Walls) -> np.ndarray:
    """Explicit right-hand side Laplacian_h u - W'(u) / eps^2 with ghost closure."""
    u = state.values
    lap = discrete_laplacian(u, walls, state.eps, state.grid.h)
    return lap - _W.derivative(u) / state.eps**2


def well_prepared(grid: Grid, eps: float, signed_distance: np.ndarray, t: float = 0.0) -> PhaseField:
    """u0 = tanh(-d / eps) for a signed distance *d* that is negative inside A."""
    values = np.clip(optimal_profile(-np.asarray(signed_distance, dtype=float), eps), -1.0, 1.0)
    return PhaseField(values=values, grid=grid, eps=eps, t=t)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def check_stability(cfg: SolverConfig, eps: float) -> float:
    """Validate the scheme against its step cap; return the bulk stabilization S."""
    if cfg.tau <= 0:
        raise StabilityCapError(f"tau must be positive, got {cfg.tau}")
    if cfg.scheme == "convex_splitting":
        return CONVEX_SPLITTING_S
    if cfg.scheme == "stabilized":
        if cfg.stabilization < MIN_STABILIZATION:
            raise StabilityCapError(
                f"stabilization S={cfg.stabilization} below {MIN_STABILIZATION}"
            )
        cap = 0.5 * eps * eps
        if cfg.tau > cap * (1 + 1e-12):
            raise StabilityCapError(f"tau={cfg.tau:.3g} exceeds stabilized cap eps^2/2={cap:.3g}")
        return float(cfg.stabilization)
    raise ValueError(f"unknown scheme {cfg.scheme!r}, expected one of {SCHEMES}")


class SemiImplicitStepper:
    """Holds the assembled system for a fixed (grid, eps, walls, tau)."""

    def __init__(self, grid: Grid, eps: float, walls: Walls, cfg: SolverConfig):
        validate_walls(walls)
        self.grid = grid
        self.eps = eps
        self.walls = walls
        self.cfg = cfg
        self.tau = cfg.tau
        self.S = check_stability(cfg, eps)

        h = grid.h
        self.contact = contact_walls(walls)
        self.faces = contact_face_counts(grid, walls)
        self.S_b = max((w.model.boundary_stiffness for w in self.contact), default=0.0)
        self._robin = self.tau / (eps * h)

        n = grid.nx * grid.ny
        diagonal = (1.0 + self.tau * self.S / eps**2) + self._robin * self.S_b * self.faces.ravel()
        self.matrix = (
            sp.diags(diagonal) + (self.tau / h**2) * graph_laplacian(grid)
        ).tocsr()
        inv_diag = 1.0 / self.matrix.diagonal()
        self.preconditioner = LinearOperator((n, n), matvec=lambda r: inv_diag * r)
        self.iterations = 0

    def rhs(self, u: np.ndarray) -> np.ndarray:
        tau, eps = self.tau, self.eps
        out = u + (tau / eps**2) * (self.S * u - _W.derivative(u))
        out = out + self._robin * self.S_b * self.faces * u
        for spec in self.contact:
            idx = wall_index(spec.wall)
            out[idx] -= self._robin * spec.model.sigma_prime(u[idx])
        return out

    def advance(self, u: np.ndarray) -> np.ndarray:
        b = self.rhs(u).ravel()
        count = [0]

        def _count(_xk):
            count[0] += 1

        x, info = cg(
            self.matrix,
            b,
            x0=u.ravel(),
            rtol=CG_RTOL,
            atol=0.0,
            M=self.preconditioner,
            maxiter=10 * b.size,
            callback=_count,
        )
        if info != 0:
            raise SolverError(f"conjugate gradients did not converge (info={info})")
        self.iterations = count[0]
        logger.debug("cg converged in %d iterations", count[0])
        return x.reshape(u.shape)

    def step(self, state: PhaseField) -> PhaseField:
        return PhaseField(
            values=self.advance(state.values),
            grid=state.grid,
            eps=state.eps,
            t=state.t + self.tau,
        )


def step(state: PhaseField, cfg: SolverConfig, walls: Walls) -> PhaseField:
    """Advance *state* by one step of size ``cfg.tau``."""
    return SemiImplicitStepper(state.grid, state.eps, walls, cfg).step(state)


def step_count(t0: float, cfg: SolverConfig) -> int:
    return max(0, math.ceil((cfg.t_end - t0) / cfg.tau - 1e-9))


def default_stride(n_steps: int) -> int:
    return max(1, math.ceil(n_steps / (MAX_SNAPSHOTS - 2)))


def run(
    u0: PhaseField,
    cfg: SolverConfig,
    walls: Walls,
    progress: Callable[[int, int], None] | None = None,
) -> Trajectory:
    """Integrate from ``u0.t`` to the absolute time ``cfg.t_end``.

    Snapshots are stored every ``snapshot_stride`` steps (default: at most
    200 per run) and always include the first and last state. The ledger has
    one row per step.
    """
    if np.max(np.abs(u0.values)) > 1.0 + MAX_ABS_TOL:
        raise ValueError("initial data must satisfy |u0| <= 1")
    stepper = SemiImplicitStepper(u0.grid, u0.eps, walls, cfg)
    grid, eps, tau = u0.grid, u0.eps, cfg.tau
    h2 = grid.h**2

    n_steps = step_count(u0.t, cfg)
    stride = cfg.snapshot_stride or default_stride(n_steps)
    logger.info(
        "run: %s, tau=%.3g, %d steps from t=%.4g, stride %d",
        cfg.scheme, tau, n_steps, u0.t, stride,
    )

    state = PhaseField(np.array(u0.values, dtype=float), grid, eps, u0.t)
    bulk, boundary = energy_parts(state.values, grid, eps, walls)
    rows = [(0, state.t, bulk + boundary, bulk, boundary, 0.0, 0.0)]
    snapshots = [state.frozen_copy()]
    max_abs = float(np.max(np.abs(state.values)))
    report_every = max(1, n_steps // 10)

    for k in range(1, n_steps + 1):
        previous = state
        state = stepper.step(previous)
        E_prev = rows[-1][2]
        bulk, boundary = energy_parts(state.values, grid, eps, walls)
        E_new = bulk + boundary
        delta = state.values - previous.values
        dissipation = eps * h2 * float(np.sum(delta * delta)) / tau
        numerical = E_prev - E_new - dissipation
        rows.append((k, state.t, E_new, bulk, boundary, dissipation, numerical))

        if E_new > E_prev + ENERGY_RTOL * (1.0 + abs(E_prev)):
            logger.warning("energy increased at step %d: %.12g -> %.12g", k, E_prev, E_new)
        current_max = float(np.max(np.abs(state.values)))
        max_abs = max(max_abs, current_max)
        if cfg.scheme == "convex_splitting" and current_max > 1.0 + MAX_ABS_TOL:
            logger.warning("maximum principle violated at step %d: |u|=%.12g", k, current_max)

        if k % stride == 0 or k == n_steps:
            snapshots.append(state.frozen_copy())
        if k % report_every == 0:
            logger.info("step %d/%d t=%.5g E=%.6g", k, n_steps, state.t, E_new)
        if progress is not None:
            progress(k, n_steps)

    ledger = pd.DataFrame(rows, columns=LEDGER_COLUMNS)
    return Trajectory(
        grid=grid,
        eps=eps,
        walls=walls,
        snapshots=snapshots,
        ledger=ledger,
        config=cfg,
        max_abs=max_abs,
    )


def weak_form_residual(
    trajectory: Trajectory,
    zeta: Callable[[np.ndarray, np.ndarray, float], np.ndarray],
) -> float:
    """Defect of the space-time weak form tested against ``zeta(X, Y, t)``.

    Each snapshot interval contributes
    h^2 sum zeta_mid [(u_{k+1} - u_k) - dt (f_k + f_{k+1}) / 2], with f the
    explicit right-hand side; the ghost closure carries the boundary term.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 2:
        return 0.0
    grid = trajectory.grid
    X, Y = grid.mesh()
    h2 = grid.h**2
    rhs = [allen_cahn_rhs(s, trajectory.walls) for s in snaps]
    total = 0.0
    for k in range(len(snaps) - 1):
        a, b = snaps[k], snaps[k + 1]
        dt = b.t - a.t
        weight = np.broadcast_to(zeta(X, Y, 0.5 * (a.t + b.t)), grid.shape)
        defect = (b.values - a.values) - 0.5 * dt * (rhs[k] + rhs[k + 1])
        total += h2 * float(np.sum(weight * defect))
    return abs(total)
