"""Reference flows, their boundary-adapted calibrations and the stability functionals.

Each reference flow provides closed-form geometry and a calibration triple
(xi, B, theta) built from a bump profile phi(d) = (1 - (d/l)^2)^2 around the
interface. Conditions are checked on the grid with fourth-order finite
differences; the constants they hold with are measured on a coarser sample
and then verified on the full grid.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.spatial import cKDTree

from diagnostics import TestFieldPair
from models import INWARD_NORMALS, WALLS, Grid, InterfaceCurve, PhaseField
from potentials import C0

logger = logging.getLogger(__name__)

MIN_CELLS_PER_LENGTH = 4
MIN_EPS_GAP = 4.0
FD_SPACE = 1.0 / 50.0
FD_TIME = 1.0 / 50.0
CONSTANT_MARGIN = 2.0
SUBSAMPLE = 4
ESTIMATE_TIMES = 3
VERIFY_TIMES = 5
BOUNDARY_TOL = 1e-10
ALIGNMENT_TOL = 1e-8
LENGTH_TOL = 1e-12
DISTANCE_FLOOR = 1.0 / 8.0  # in units of h

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(2)

Field = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class ReferenceFlowError(ValueError):
    pass


class CoarseGridError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def bump(d, ell: float):
    """(1 - (d/ell)^2)^2 inside |d| < ell, zero outside."""
    s = np.clip(np.abs(d) / ell, 0.0, 1.0)
    return (1.0 - s * s) ** 2


def ramp(d, ell: float):
    return np.clip(d / ell, -1.0, 1.0)


def wall_distance(X, Y, lx: float, ly: float):
    return np.minimum(np.minimum(X, lx - X), np.minimum(Y, ly - Y))


def _stack(vx, vy, shape) -> np.ndarray:
    return np.stack([np.broadcast_to(vx, shape), np.broadcast_to(vy, shape)]).astype(float)


# ---------------------------------------------------------------------------
# Reference flows
# ---------------------------------------------------------------------------

class ReferenceFlow(ABC):
    """Closed-form evolution A(t) in (0, lx) x (0, ly).

    ``signed_distance`` is negative inside A. ``calibration_distance`` is the
    signed coordinate the calibration is built on (equal to the signed
    distance except for the translator, which uses the vertical offset).
    """

    kind: str = "reference"
    alpha: float = math.pi / 2

    def __init__(self, lx: float, ly: float):
        self.lx = float(lx)
        self.ly = float(ly)

    @abstractmethod
    def signed_distance(self, X, Y, t: float) -> np.ndarray: ...

    def calibration_distance(self, X, Y, t: float) -> np.ndarray:
        return self.signed_distance(X, Y, t)

    def region(self, X, Y, t: float) -> np.ndarray:
        return self.signed_distance(X, Y, t) < 0

    def interface_distance(self, X, Y, t: float) -> np.ndarray:
        return np.abs(self.signed_distance(X, Y, t))

    @abstractmethod
    def interface(self, t: float, n: int = 400) -> tuple[np.ndarray, np.ndarray]:
        """Points and inner normals nu_A sampled along the interface."""

    @abstractmethod
    def length_scale(self, horizon: float) -> float: ...

    def coercivity_constant(self) -> float:
        return 0.1

    @abstractmethod
    def xi(self, X, Y, t: float, ell: float) -> np.ndarray: ...

    @abstractmethod
    def velocity(self, X, Y, t: float, ell: float) -> np.ndarray: ...

    def weight(self, X, Y, t: float, ell: float) -> np.ndarray:
        return ramp(self.calibration_distance(X, Y, t), ell)

    def wall_cosines(self) -> dict[str, float]:
        return {wall: 0.0 for wall in WALLS}

    def contact_walls(self) -> tuple[str, ...]:
        return ()

    @abstractmethod
    def sharp_energy(self, t: float, jump: float = 0.0) -> float: ...

    @abstractmethod
    def validate(self, eps: float, horizon: float) -> None: ...

    def normal_speed(self, X, Y, t: float) -> np.ndarray:
        return np.zeros(np.shape(X))

    def measured_quantity(self, t: float) -> float:
        return math.nan

    def describe(self) -> dict:
        return {"kind": self.kind, "lx": self.lx, "ly": self.ly, "alpha": self.alpha}


class StationaryChord(ReferenceFlow):
    """A = {x > x0}, a vertical chord meeting bottom and top at right angles."""

    kind = "stationary_chord"

    def __init__(self, x0: float, lx: float = 1.0, ly: float = 1.0):
        super().__init__(lx, ly)
        if not 0.0 < x0 < lx:
            raise ReferenceFlowError(f"chord position {x0} outside (0, {lx})")
        self.x0 = float(x0)

    def signed_distance(self, X, Y, t):
        return self.x0 - np.asarray(X, dtype=float) + 0.0 * np.asarray(Y)

    def interface(self, t, n=400):
        y = np.linspace(0.0, self.ly, n)
        points = np.column_stack([np.full(n, self.x0), y])
        return points, np.tile([1.0, 0.0], (n, 1))

    def length_scale(self, horizon):
        return min(1.0, min(self.x0, self.lx - self.x0) / 4.0)

    def xi(self, X, Y, t, ell):
        X = np.asarray(X, dtype=float)
        return _stack(bump(X - self.x0, ell), 0.0, np.broadcast(X, Y).shape)

    def velocity(self, X, Y, t, ell):
        return np.zeros((2,) + np.broadcast(np.asarray(X), np.asarray(Y)).shape)

    def sharp_energy(self, t, jump=0.0):
        return C0 * self.ly

    def validate(self, eps, horizon):
        if min(self.x0, self.lx - self.x0) < MIN_EPS_GAP * eps:
            raise ReferenceFlowError("chord closer than 4 eps to a side wall")

    def measured_quantity(self, t):
        return self.x0

    def describe(self):
        return {**super().describe(), "x0": self.x0}


class ShrinkingHalfDisk(ReferenceFlow):
    """Half-disk centred on the bottom wall with R(t)^2 = r0^2 - 2t."""

    kind = "shrinking_half_disk"

    def __init__(self, r0: float, xc: float, lx: float = 1.0, ly: float = 0.5):
        super().__init__(lx, ly)
        if r0 <= 0:
            raise ReferenceFlowError(f"radius must be positive, got {r0}")
        self.r0 = float(r0)
        self.xc = float(xc)
        if self.gap <= 0:
            raise ReferenceFlowError(
                f"half-disk of radius {r0} at x={xc} does not fit in {lx} x {ly}"
            )

    @property
    def gap(self) -> float:
        return min(self.xc - self.r0, self.lx - self.xc - self.r0, self.ly - self.r0)

    @property
    def extinction_time(self) -> float:
        return 0.5 * self.r0**2

    def radius(self, t: float) -> float:
        value = self.r0**2 - 2.0 * t
        if value <= 0:
            raise ReferenceFlowError(f"half-disk has vanished at t={t}")
        return math.sqrt(value)

    def _polar(self, X, Y):
        dx = np.asarray(X, dtype=float) - self.xc
        dy = np.asarray(Y, dtype=float)
        return dx, dy, np.hypot(dx, dy)

    def signed_distance(self, X, Y, t):
        return self._polar(X, Y)[2] - self.radius(t)

    def interface(self, t, n=400):
        R = self.radius(t)
        angle = np.linspace(0.0, math.pi, n)
        radial = np.column_stack([np.cos(angle), np.sin(angle)])
        return np.array([self.xc, 0.0]) + R * radial, -radial

    def length_scale(self, horizon):
        return min(1.0, min(self.radius(horizon), self.gap) / 4.0)

    def xi(self, X, Y, t, ell):
        dx, dy, r = self._polar(X, Y)
        phi = bump(r - self.radius(t), ell)
        safe = np.where(r > 0, r, 1.0)
        return np.stack([-phi * dx / safe, -phi * dy / safe])

    def velocity(self, X, Y, t, ell):
        return self.xi(X, Y, t, ell) / self.radius(t)

    def sharp_energy(self, t, jump=0.0):
        return C0 * math.pi * self.radius(t)

    def normal_speed(self, X, Y, t):
        return np.full(np.shape(X), -1.0 / self.radius(t))

    def measured_quantity(self, t):
        return self.radius(t)

    def validate(self, eps, horizon):
        if horizon >= self.extinction_time:
            raise ReferenceFlowError(
                f"horizon {horizon} beyond extinction time {self.extinction_time:.4g}"
            )
        if self.radius(horizon) <= MIN_EPS_GAP * eps:
            raise ReferenceFlowError(
                f"R(T)={self.radius(horizon):.4g} not resolved by eps={eps} (needs > 4 eps)"
            )
        if self.gap < MIN_EPS_GAP * eps:
            raise ReferenceFlowError("half-disk closer than 4 eps to a side or top wall")

    def describe(self):
        return {**super().describe(), "r0": self.r0, "xc": self.xc}


class StripTranslator(ReferenceFlow):
    """Translating graph y = y0 + a t - log(cos(a (x - w/2))) / a in a strip of width w.

    A lies above the graph and meets the side walls at angle alpha, measured
    inside A; the speed is a = (pi - 2 alpha) / w.
    """

    kind = "strip_translator"

    def __init__(self, alpha: float, lx: float = 1.0, ly: float = 2.0, y0: float = 0.5):
        super().__init__(lx, ly)
        if not 0.0 < alpha < math.pi:
            raise ReferenceFlowError(f"translator angle must lie in (0, pi), got {alpha}")
        self.alpha = float(alpha)
        self.width = self.lx
        self.y0 = float(y0)
        self.speed = (math.pi - 2.0 * alpha) / self.width

    def _theta(self, X):
        return self.speed * (np.asarray(X, dtype=float) - 0.5 * self.width)

    def graph(self, X, t: float):
        X = np.asarray(X, dtype=float)
        if abs(self.speed) < 1e-14:
            return np.full(X.shape, self.y0)
        return self.y0 + self.speed * t - np.log(np.cos(self._theta(X))) / self.speed

    def graph_normal(self, X) -> np.ndarray:
        theta = self._theta(X)
        return np.stack([-np.sin(theta), np.cos(theta)])

    def calibration_distance(self, X, Y, t):
        return self.graph(X, t) - np.asarray(Y, dtype=float)

    def _samples(self, t: float, n: int) -> np.ndarray:
        x = np.linspace(0.0, self.width, n)
        return np.column_stack([x, self.graph(x, t)])

    def signed_distance(self, X, Y, t):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        shape = np.broadcast(X, Y).shape
        samples = self._samples(t, 4001)
        query = np.column_stack([np.broadcast_to(X, shape).ravel(), np.broadcast_to(Y, shape).ravel()])
        dist, _ = cKDTree(samples).query(query)
        sign = np.where(self.calibration_distance(X, Y, t) < 0, -1.0, 1.0)
        return sign * dist.reshape(shape)

    def interface(self, t, n=400):
        points = self._samples(t, n)
        return points, self.graph_normal(points[:, 0]).T

    def _extremes(self, horizon: float) -> tuple[float, float]:
        x = np.linspace(0.0, self.width, 201)
        lows = [float(self.graph(x, s).min()) for s in (0.0, horizon)]
        highs = [float(self.graph(x, s).max()) for s in (0.0, horizon)]
        return min(lows), max(highs)

    def length_scale(self, horizon):
        low, high = self._extremes(horizon)
        scales = [low, self.ly - high]
        if abs(self.speed) > 1e-14:
            scales.append(1.0 / abs(self.speed))
        return min(1.0, min(scales) / 4.0)

    def coercivity_constant(self):
        return min(0.1, 0.5 * (1.0 - abs(math.cos(self.alpha))))

    def _far_field(self, X):
        X = np.asarray(X, dtype=float)
        return math.cos(self.alpha) * (1.0 - 2.0 * X / self.width)

    def xi(self, X, Y, t, ell):
        shape = np.broadcast(np.asarray(X), np.asarray(Y)).shape
        phi = bump(self.calibration_distance(X, Y, t), ell)
        normal = self.graph_normal(X)
        return _stack(
            phi * normal[0] + (1.0 - phi) * self._far_field(X),
            phi * normal[1],
            shape,
        )

    def velocity(self, X, Y, t, ell):
        shape = np.broadcast(np.asarray(X), np.asarray(Y)).shape
        phi = bump(self.calibration_distance(X, Y, t), ell)
        return _stack(0.0, self.speed * phi, shape)

    def wall_cosines(self):
        cos_a = math.cos(self.alpha)
        return {"left": cos_a, "right": cos_a, "bottom": 0.0, "top": 0.0}

    def contact_walls(self):
        return ("left", "right")

    def arc_length(self, t: float = 0.0, n: int = 4001) -> float:
        points = self._samples(t, n)
        return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))

    def sharp_energy(self, t, jump=0.0):
        wetted = (self.ly - float(self.graph(0.0, t))) + (self.ly - float(self.graph(self.width, t)))
        return C0 * self.arc_length(t) + jump * wetted

    def normal_speed(self, X, Y, t):
        return -self.speed * np.cos(self._theta(X)) + 0.0 * np.asarray(Y)

    def measured_quantity(self, t):
        return self.speed

    def validate(self, eps, horizon):
        low, high = self._extremes(horizon)
        if low < MIN_EPS_GAP * eps or self.ly - high < MIN_EPS_GAP * eps:
            raise ReferenceFlowError(
                f"translator leaves the strip before T={horizon} (gaps {low:.3g}, {self.ly - high:.3g})"
            )

    def describe(self):
        return {**super().describe(), "y0": self.y0, "speed": self.speed}


# ---------------------------------------------------------------------------
# Calibration fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionResult:
    name: str
    worst_ratio: float
    location: tuple[float, float, float]
    constant_used: float | None
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_ratio": self.worst_ratio,
            "location": list(self.location),
            "constant_used": self.constant_used,
            "passed": self.passed,
        }


CONSTANT_CONDITIONS = (
    "weight_coercivity",
    "xi_transport",
    "xi_length_transport",
    "weight_transport",
    "motion_compatibility",
)
CONDITION_NAMES = (
    "xi_boundary",
    "velocity_boundary",
    "weight_sign",
    "interface_alignment",
    "xi_length",
) + CONSTANT_CONDITIONS


@dataclass(frozen=True)
class CalibrationFields:
    """Grid samples of (xi, B, theta) for a reference flow at time *t*."""

    flow: ReferenceFlow
    grid: Grid
    t: float
    horizon: float
    ell: float
    c: float
    C: dict[str, float]
    xi: np.ndarray
    velocity: np.ndarray
    weight: np.ndarray
    reference_mask: np.ndarray
    xi_scale: float = 1.0
    complement: bool = False

    @property
    def orientation(self) -> float:
        return -1.0 if self.complement else 1.0

    # Continuous maps including scaling and orientation
    def xi_map(self, X, Y, t: float) -> np.ndarray:
        return self.orientation * self.xi_scale * self.flow.xi(X, Y, t, self.ell)

    def velocity_map(self, X, Y, t: float) -> np.ndarray:
        return self.flow.velocity(X, Y, t, self.ell)

    def weight_map(self, X, Y, t: float) -> np.ndarray:
        return self.orientation * self.flow.weight(X, Y, t, self.ell)

    def region_map(self, X, Y, t: float) -> np.ndarray:
        inside = self.flow.region(X, Y, t)
        return ~inside if self.complement else inside

    def xi_at(self, x, y) -> np.ndarray:
        return self.xi_map(np.asarray(x, dtype=float), np.asarray(y, dtype=float), self.t)

    def weight_at(self, x, y) -> np.ndarray:
        return self.weight_map(np.asarray(x, dtype=float), np.asarray(y, dtype=float), self.t)

    def wall_cosines(self) -> dict[str, float]:
        return {w: self.orientation * c for w, c in self.flow.wall_cosines().items()}

    def at_time(self, t: float) -> CalibrationFields:
        return _sampled(replace(self, t=t))

    def swapped(self) -> CalibrationFields:
        """Fields for the complementary phase: xi and theta change sign, B is kept."""
        return _sampled(replace(self, complement=not self.complement))

    def corrupted(self, factor: float = 1.05, rng: np.random.Generator | None = None) -> CalibrationFields:
        """Copy with xi scaled by *factor* plus a small random jitter (negative control)."""
        jitter = 0.01 * float(rng.random()) if rng is not None else 0.0
        return _sampled(replace(self, xi_scale=self.xi_scale * (factor + jitter)))

    def test_pair(self, eta: Callable | None = None) -> TestFieldPair:
        weight = eta if eta is not None else (lambda x, y: np.ones(np.shape(x)))
        return TestFieldPair(eta=weight, xi=self.xi_at, name=f"{self.flow.kind}-calibration")


def _sampled(fields: CalibrationFields) -> CalibrationFields:
    X, Y = fields.grid.mesh()
    t = fields.t
    return replace(
        fields,
        xi=fields.xi_map(X, Y, t),
        velocity=fields.velocity_map(X, Y, t),
        weight=fields.weight_map(X, Y, t),
        reference_mask=fields.region_map(X, Y, t),
    )


# ---------------------------------------------------------------------------
# Condition residuals
# ---------------------------------------------------------------------------

def _d(f: Callable[[float], np.ndarray], delta: float) -> np.ndarray:
    """Fourth-order central difference of a one-parameter family at 0."""
    return (-f(2 * delta) + 8 * f(delta) - 8 * f(-delta) + f(-2 * delta)) / (12.0 * delta)


def _derivatives(fmap: Field, X, Y, t: float, ell: float):
    dx = ell * FD_SPACE
    dt = ell * ell * FD_TIME
    fx = _d(lambda s: fmap(X + s, Y, t), dx)
    fy = _d(lambda s: fmap(X, Y + s, t), dx)
    ft = _d(lambda s: fmap(X, Y, t + s), dt)
    return fx, fy, ft


def _constant_residuals(fields: CalibrationFields, X, Y, t: float) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-condition (lhs, factor) arrays; each condition reads lhs <= C * factor."""
    flow, ell, h = fields.flow, fields.ell, fields.grid.h
    xi = fields.xi_map(X, Y, t)
    B = fields.velocity_map(X, Y, t)
    theta = fields.weight_map(X, Y, t)
    xi_x, xi_y, xi_t = _derivatives(fields.xi_map, X, Y, t, ell)
    B_x, B_y, _ = _derivatives(fields.velocity_map, X, Y, t, ell)
    th_x, th_y, th_t = _derivatives(fields.weight_map, X, Y, t, ell)

    advect_xi = xi_t + B[0] * xi_x + B[1] * xi_y
    grad_B_T_xi = np.stack([B_x[0] * xi[0] + B_x[1] * xi[1], B_y[0] * xi[0] + B_y[1] * xi[1]])
    dist = flow.interface_distance(X, Y, t)
    floor = DISTANCE_FLOOR * h
    lin = np.minimum(1.0, np.maximum(dist, floor))
    quad = np.minimum(1.0, np.maximum(dist, floor) ** 2)
    boundary_dist = wall_distance(X, Y, flow.lx, flow.ly)

    return {
        "weight_coercivity": (
            np.minimum(np.minimum(boundary_dist, dist), 1.0),
            np.maximum(np.abs(theta), floor / ell),
        ),
        "xi_transport": (np.linalg.norm(advect_xi + grad_B_T_xi, axis=0), lin),
        "xi_length_transport": (np.abs(np.sum(xi * advect_xi, axis=0)), quad),
        "weight_transport": (
            np.abs(th_t + B[0] * th_x + B[1] * th_y),
            np.maximum(np.abs(theta), floor / ell),
        ),
        "motion_compatibility": (np.abs(np.sum(B * xi, axis=0) + xi_x[0] + xi_y[1]), lin),
    }


def _worst(values: np.ndarray, X, Y, t: float) -> tuple[float, tuple[float, float, float]]:
    index = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(values[index]), (float(X[index]), float(Y[index]), float(t))


def estimate_constants(fields: CalibrationFields) -> dict[str, float]:
    """Twice the worst ratio of each constant-bearing condition on a subsampled grid."""
    X, Y = fields.grid.mesh()
    Xs, Ys = X[::SUBSAMPLE, ::SUBSAMPLE], Y[::SUBSAMPLE, ::SUBSAMPLE]
    worst = dict.fromkeys(CONSTANT_CONDITIONS, 0.0)
    for t in np.linspace(0.0, fields.horizon, ESTIMATE_TIMES):
        for name, (lhs, factor) in _constant_residuals(fields, Xs, Ys, float(t)).items():
            worst[name] = max(worst[name], float(np.max(lhs / factor)))
    return {name: max(CONSTANT_MARGIN * value, 1e-8) for name, value in worst.items()}


def _boundary_results(fields: CalibrationFields, t: float) -> list[ConditionResult]:
    grid = fields.grid
    cosines = fields.wall_cosines()
    xi_worst, xi_loc = 0.0, (math.nan, math.nan, t)
    B_worst, B_loc = 0.0, (math.nan, math.nan, t)
    for wall in WALLS:
        if wall in ("left", "right"):
            px = np.full(grid.ny, 0.0 if wall == "left" else grid.lx)
            py = grid.y
        else:
            px = grid.x
            py = np.full(grid.nx, 0.0 if wall == "bottom" else grid.ly)
        normal = np.asarray(INWARD_NORMALS[wall])
        xi_err = np.abs(normal @ fields.xi_map(px, py, t) - cosines[wall])
        B_err = np.abs(normal @ fields.velocity_map(px, py, t))
        k = int(np.argmax(xi_err))
        if xi_err[k] > xi_worst:
            xi_worst, xi_loc = float(xi_err[k]), (float(px[k]), float(py[k]), t)
        k = int(np.argmax(B_err))
        if B_err[k] > B_worst:
            B_worst, B_loc = float(B_err[k]), (float(px[k]), float(py[k]), t)
    return [
        ConditionResult("xi_boundary", xi_worst / BOUNDARY_TOL, xi_loc, None, xi_worst <= BOUNDARY_TOL),
        ConditionResult("velocity_boundary", B_worst / BOUNDARY_TOL, B_loc, None, B_worst <= BOUNDARY_TOL),
    ]


def _pointwise_results(fields: CalibrationFields, X, Y, t: float) -> list[ConditionResult]:
    flow = fields.flow
    theta = fields.weight_map(X, Y, t)
    sd = flow.signed_distance(X, Y, t)
    if fields.complement:
        sd = -sd
    tol = DISTANCE_FLOOR * fields.grid.h
    wrong = np.where(sd > tol, np.maximum(0.0, -theta), 0.0) + np.where(sd < -tol, np.maximum(0.0, theta), 0.0)
    sign_worst, sign_loc = _worst(wrong, X, Y, t)

    points, normals = flow.interface(t)
    px, py = points[:, 0], points[:, 1]
    xi_iface = fields.xi_map(px, py, t)
    nu = fields.orientation * normals.T
    length = np.linalg.norm(xi_iface, axis=0)
    direction = np.linalg.norm(xi_iface / np.maximum(length, 1e-300) - nu, axis=0)
    shortfall = np.maximum(0.0, 1.0 - length)
    theta_iface = np.abs(fields.weight_map(px, py, t))
    align = np.maximum(np.maximum(direction, shortfall), theta_iface) / ALIGNMENT_TOL
    k = int(np.argmax(align))
    align_loc = (float(px[k]), float(py[k]), t)

    dist = flow.interface_distance(X, Y, t)
    xi = fields.xi_map(X, Y, t)
    excess = np.linalg.norm(xi, axis=0) + fields.c * np.minimum(1.0, dist**2)
    length_worst, length_loc = _worst(excess, X, Y, t)

    return [
        ConditionResult("weight_sign", sign_worst, sign_loc, None, sign_worst <= 0.0),
        ConditionResult("interface_alignment", float(align[k]), align_loc, None, float(align[k]) <= 1.0),
        ConditionResult("xi_length", length_worst, length_loc, None, length_worst <= 1.0 + LENGTH_TOL),
    ]


def verify_calibration(fields: CalibrationFields, times: int = VERIFY_TIMES) -> list[ConditionResult]:
    """Check every calibration condition on the full grid at *times* instants in [0, T]."""
    X, Y = fields.grid.mesh()
    merged: dict[str, ConditionResult] = {}

    def keep(result: ConditionResult) -> None:
        current = merged.get(result.name)
        if current is None or result.worst_ratio > current.worst_ratio:
            merged[result.name] = result

    for t in np.linspace(0.0, fields.horizon, times):
        t = float(t)
        for result in _boundary_results(fields, t) + _pointwise_results(fields, X, Y, t):
            keep(result)
        for name, (lhs, factor) in _constant_residuals(fields, X, Y, t).items():
            ratio, loc = _worst(lhs / factor, X, Y, t)
            constant = fields.C[name]
            keep(ConditionResult(name, ratio, loc, constant, ratio <= constant))

    results = [merged[name] for name in CONDITION_NAMES]
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning("calibration of %s fails: %s", fields.flow.kind, ", ".join(failed))
    return results


def build_calibration(flow: ReferenceFlow, grid: Grid, horizon: float, eps: float | None = None, t: float = 0.0) -> CalibrationFields:
    """Calibration fields of *flow* on *grid* valid up to *horizon*."""
    if eps is not None:
        flow.validate(eps, horizon)
    ell = flow.length_scale(horizon)
    if ell < MIN_CELLS_PER_LENGTH * grid.h:
        raise CoarseGridError(
            f"calibration length {ell:.4g} spans fewer than {MIN_CELLS_PER_LENGTH} cells (h={grid.h})"
        )
    empty = np.zeros(0)
    fields = CalibrationFields(
        flow=flow,
        grid=grid,
        t=t,
        horizon=horizon,
        ell=ell,
        c=flow.coercivity_constant(),
        C={},
        xi=empty,
        velocity=empty,
        weight=empty,
        reference_mask=np.zeros(0, dtype=bool),
    )
    fields = replace(fields, C=estimate_constants(fields))
    logger.info("calibration %s: ell=%.4g, constants %s", flow.kind, ell, fields.C)
    return _sampled(fields)


# ---------------------------------------------------------------------------
# Stability functionals
# ---------------------------------------------------------------------------

def relative_entropy_sharp(curve: InterfaceCurve, fields: CalibrationFields) -> float:
    """c0 int (1 - nu_A . xi) over the interior interface."""
    total = 0.0
    for poly in curve.components:
        start, end = poly.segments
        d = end - start
        lengths = np.linalg.norm(d, axis=1)
        keep = lengths > 0
        nu = np.column_stack([-d[keep, 1], d[keep, 0]]) / lengths[keep, None]
        mid = 0.5 * (start[keep] + end[keep])
        half = 0.5 * d[keep]
        for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
            p = mid + node * half
            xi = fields.xi_at(p[:, 0], p[:, 1])
            total += float(np.sum(0.5 * weight * lengths[keep] * (1.0 - np.sum(nu.T * xi, axis=0))))
    return C0 * total


def bulk_error(A, fields: CalibrationFields) -> float:
    """int over the symmetric difference of A and the reference region of |theta|.

    *A* is a PhaseField (A = {u > 0}), an InterfaceCurve (its cell mask) or a
    boolean cell mask.
    """
    if isinstance(A, PhaseField):
        mask = np.asarray(A.values) > 0
    elif isinstance(A, InterfaceCurve):
        mask = A.cell_mask
    else:
        mask = np.asarray(A, dtype=bool)
    if mask is None or mask.shape != fields.grid.shape:
        raise ValueError("region mask does not match the calibration grid")
    diff = mask ^ fields.reference_mask
    return fields.grid.h**2 * float(np.sum(np.abs(fields.weight)[diff]))


@dataclass
class GronwallReport:
    times: np.ndarray
    rel_entropy: np.ndarray
    bulk: np.ndarray
    smallest_C_relEn: float
    smallest_C_bulk: float
    C: float | None
    rhs_relEn: np.ndarray
    rhs_bulk: np.ndarray
    envelope: np.ndarray
    passed: bool | None = None
    envelope_ok: bool | None = None
    notes: list[str] = field(default_factory=list)


def _scaled(C: float, integral: np.ndarray) -> np.ndarray:
    """C * integral with 0 * inf read as 0."""
    with np.errstate(invalid="ignore"):
        return np.where(integral != 0, C * integral, 0.0)


def gronwall_check(
    times,
    rel_entropy,
    bulk,
    C: float | None = None,
    slack: float = 0.0,
) -> GronwallReport:
    """Integral Gronwall inequalities for the relative entropy and bulk error series.

    relEn(t) <= relEn(0) + C int relEn, and
    bulk(t) <= bulk(0) + relEn(0) + C int (bulk + relEn).
    Reports the smallest admissible C for each and, when *C* is given, whether
    both hold; the weak-strong envelope is (relEn(0) + bulk(0)) e^{Ct} + slack.
    """
    t = np.asarray(times, dtype=float)
    E = np.asarray(rel_entropy, dtype=float)
    Bk = np.asarray(bulk, dtype=float)
    if t.ndim != 1 or t.size != E.size or t.size != Bk.size:
        raise ValueError("times and series must be one-dimensional and equally long")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time stamps must be strictly increasing")

    int_E = cumulative_trapezoid(E, t, initial=0.0)
    int_EB = cumulative_trapezoid(E + Bk, t, initial=0.0)

    def smallest(excess: np.ndarray, integral: np.ndarray) -> float:
        positive = integral > 0
        worst = 0.0
        if positive.any():
            worst = max(0.0, float(np.max(excess[positive] / integral[positive])))
        if np.any(excess[~positive] > 1e-14):
            return math.inf
        return worst

    C_rel = smallest(E - E[0], int_E)
    C_bulk = smallest(Bk - Bk[0] - E[0], int_EB)
    used = C if C is not None else max(C_rel, C_bulk)
    rhs_rel = E[0] + _scaled(used, int_E)
    rhs_bulk = Bk[0] + E[0] + _scaled(used, int_EB)
    start = E[0] + Bk[0]
    if start == 0.0:
        envelope = np.full_like(t, slack)
    elif math.isfinite(used):
        with np.errstate(over="ignore"):
            envelope = start * np.exp(used * (t - t[0])) + slack
    else:
        envelope = np.full_like(t, math.inf)

    report = GronwallReport(
        times=t,
        rel_entropy=E,
        bulk=Bk,
        smallest_C_relEn=C_rel,
        smallest_C_bulk=C_bulk,
        C=C,
        rhs_relEn=rhs_rel,
        rhs_bulk=rhs_bulk,
        envelope=envelope,
    )
    if C is not None:
        tol = 1e-12 * (1.0 + np.abs(rhs_rel))
        report.passed = bool(np.all(E <= rhs_rel + tol) and np.all(Bk <= rhs_bulk + 1e-12 * (1.0 + np.abs(rhs_bulk))))
        if np.all(np.isfinite(envelope)):
            report.envelope_ok = bool(np.all(E + Bk <= envelope * (1 + 1e-12) + 1e-14))
        else:
            report.envelope_ok = None
            report.notes.append(f"weak-strong envelope is not finite for C={used:g}")
        if not report.passed:
            report.notes.append(f"Gronwall inequality violated with C={C}")
    return report


def build_reference(kind: str, lx: float, ly: float, **params) -> ReferenceFlow:
    """Factory used by the harness: *kind* is a ReferenceFlow.kind or a short alias."""
    aliases = {
        "chord": "stationary_chord",
        "half_disk": "shrinking_half_disk",
        "translator": "strip_translator",
        "translator_graph": "strip_translator",
    }
    kind = aliases.get(kind, kind)
    if kind == "stationary_chord":
        return StationaryChord(params.get("x0", 0.5 * lx), lx, ly)
    if kind == "shrinking_half_disk":
        return ShrinkingHalfDisk(params["r0"], params.get("xc", 0.5 * lx), lx, ly)
    if kind == "strip_translator":
        return StripTranslator(params["alpha"], lx, ly, params.get("y0", 0.25 * ly))
    raise ReferenceFlowError(f"unknown reference flow {kind!r}")
