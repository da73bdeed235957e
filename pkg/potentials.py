"""Double-well potential, boundary energy densities and surface-tension algebra.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

C0 = 4.0 / 3.0
ENVELOPE_SAMPLES = 2001
NEUMANN_COS_TOL = 1e-14
YOUNG_TOL = 1e-10


class NonWettingError(ValueError):
    pass


class AngleRangeError(ValueError):
    pass


class EmptySamplesError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Double well and psi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleWell:
    """W(s) = (1 - s^2)^2 / 2."""

    def __call__(self, s):
        return 0.5 * (1.0 - s * s) ** 2

    def derivative(self, s):
        return -2.0 * s * (1.0 - s * s)

    def second_derivative(self, s):
        return 6.0 * s * s - 2.0


def eval_double_well(s):
    return DoubleWell()(s)


def double_well_derivative(s):
    return DoubleWell().derivative(s)


def eval_psi(s):
    """Antiderivative of sqrt(2W) from -1, clamped to [0, c0] outside [-1, 1]."""
    s = np.clip(s, -1.0, 1.0)
    return s - s**3 / 3.0 + 2.0 / 3.0


def psi_inverse(y):
    """Inverse of :func:`eval_psi` on [0, c0] (the trigonometric cubic root)."""
    y = np.clip(y, 0.0, C0)
    phase = np.arccos(np.clip(1.0 - 1.5 * y, -1.0, 1.0)) / 3.0
    return np.clip(2.0 * np.cos(phase - 2.0 * np.pi / 3.0), -1.0, 1.0)


def optimal_profile(x, eps: float):
    """Standing 1D profile tanh(x / eps)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return np.tanh(np.asarray(x, dtype=float) / eps)


# ---------------------------------------------------------------------------
# Boundary energy
# ---------------------------------------------------------------------------

def _check_normalized_angle(alpha: float) -> None:
    if not (0.0 < alpha <= math.pi / 2 + 1e-15):
        raise AngleRangeError(
            f"boundary energy needs alpha in (0, pi/2], got {alpha!r}; "
            "use EnergyModel.from_angle for obtuse angles"
        )


@dataclass(frozen=True)
class BoundaryEnergy:
    """Standard cubic density sigma(s) = cos(alpha) * psi(s), alpha in (0, pi/2]."""

    alpha: float

    def __post_init__(self) -> None:
        _check_normalized_angle(self.alpha)

    @property
    def neumann(self) -> bool:
        return abs(math.cos(self.alpha)) < NEUMANN_COS_TOL

    @property
    def cos_alpha(self) -> float:
        return 0.0 if self.neumann else math.cos(self.alpha)

    def sigma(self, s):
        return self.cos_alpha * eval_psi(s)

    def sigma_prime(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) <= 1.0
        return np.where(inside, self.cos_alpha * (1.0 - s * s), 0.0)


def eval_boundary_energy(s, alpha: float):
    return BoundaryEnergy(alpha).sigma(s)


def boundary_energy_derivative(s, alpha: float):
    return BoundaryEnergy(alpha).sigma_prime(s)


# ---------------------------------------------------------------------------
# 1-Lipschitz lower envelope
# ---------------------------------------------------------------------------

@njit(cache=True)
def _envelope_two_pass(values, positions):
    n = values.shape[0]
    source = np.arange(n)
    out = values.copy()
    for i in range(1, n):
        j = source[i - 1]
        cand = values[j] + abs(positions[i] - positions[j])
        if cand < out[i]:
            out[i] = cand
            source[i] = j
    for i in range(n - 2, -1, -1):
        j = source[i + 1]
        cand = values[j] + abs(positions[i] - positions[j])
        if cand < out[i]:
            out[i] = cand
            source[i] = j
    return out


@njit(cache=True)
def _envelope_brute_force(values, positions):
    n = values.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = values[i]
        for j in range(n):
            cand = values[j] + abs(positions[i] - positions[j])
            if cand < best:
                best = cand
        out[i] = best
    return out


def lipschitz_envelope(
    samples,
    positions=None,
    method: str = "two_pass",
) -> np.ndarray:
    """Largest 1-Lipschitz function below *samples*.

    *positions* default to a uniform grid of [0, c0]; any nondecreasing
    positions are accepted. ``method`` is ``"two_pass"`` (O(n)) or
    ``"brute_force"`` (O(n^2)).
    """
    values = np.ascontiguousarray(samples, dtype=float)
    if values.size == 0:
        raise EmptySamplesError("lipschitz_envelope needs at least one sample")
    if positions is None:
        positions = np.linspace(0.0, C0, values.size)
    positions = np.ascontiguousarray(positions, dtype=float)
    if positions.shape != values.shape:
        raise ValueError("positions and samples differ in shape")
    if np.any(np.diff(positions) < 0):
        raise ValueError("envelope positions must be nondecreasing")
    if method == "two_pass":
        return _envelope_two_pass(values, positions)
    if method == "brute_force":
        return _envelope_brute_force(values, positions)
    raise ValueError(f"unknown envelope method {method!r}")


def young_angle(jump: float, c0: float = C0) -> float:
    """Contact angle arccos(jump / c0) from Young's law."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    if jump < 0 or jump >= c0:
        raise NonWettingError(
            f"jump {jump:.6g} outside [0, c0={c0:.6g}): non-wetting configuration"
        )
    return math.acos(jump / c0)


# ---------------------------------------------------------------------------
# Energy model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyModel:
    """The pair (W, sigma) in the user's angle convention.

    Angles above pi/2 are mapped to the normalized problem by swapping the
    phases: sigma(u) = sigma_std(-u; pi - alpha). ``boundary`` always holds the
    normalized density and ``sign`` the phase orientation (+1 or -1).
    """

    alpha: float
    boundary: BoundaryEnergy
    swapped: bool = False
    sigma_hat_jump: float = 0.0
    double_well: DoubleWell = field(default_factory=DoubleWell)

    @classmethod
    def from_angle(cls, alpha: float, samples: int = ENVELOPE_SAMPLES) -> EnergyModel:
        if not (0.0 < alpha < math.pi):
            raise AngleRangeError(f"contact angle must lie in (0, pi), got {alpha!r}")
        swapped = alpha > math.pi / 2
        boundary = BoundaryEnergy(math.pi - alpha if swapped else alpha)

        y = np.linspace(0.0, C0, samples)
        tau_hat = lipschitz_envelope(boundary.sigma(psi_inverse(y)))
        jump = float(tau_hat[-1] - tau_hat[0])
        expected = C0 * boundary.cos_alpha
        if abs(jump - expected) > YOUNG_TOL:
            raise NonWettingError(
                f"relaxed jump {jump:.12g} violates Young's law (expected {expected:.12g})"
            )
        young_angle(jump)
        return cls(alpha=alpha, boundary=boundary, swapped=swapped, sigma_hat_jump=jump)

    @property
    def c0(self) -> float:
        return C0

    @property
    def sign(self) -> float:
        return -1.0 if self.swapped else 1.0

    @property
    def cos_alpha(self) -> float:
        return self.sign * self.boundary.cos_alpha

    @property
    def jump(self) -> float:
        """sigma_hat(+1) - sigma_hat(-1) in the user's convention (= c0 cos alpha)."""
        return self.sign * self.sigma_hat_jump

    @property
    def young_angle(self) -> float:
        normalized = young_angle(self.sigma_hat_jump)
        return math.pi - normalized if self.swapped else normalized

    @property
    def sigma_floor(self) -> float:
        """sigma(-1): zero unless the phases are swapped."""
        return float(self.sigma(-1.0))

    @property
    def boundary_stiffness(self) -> float:
        """Bound on |sigma''| over [-1, 1]."""
        return 2.0 * abs(self.boundary.cos_alpha)

    @property
    def neumann(self) -> bool:
        return self.boundary.neumann

    def W(self, s):
        return self.double_well(s)

    def W_prime(self, s):
        return self.double_well.derivative(s)

    def psi(self, s):
        return eval_psi(s)

    def sigma(self, u):
        return self.boundary.sigma(self.sign * np.asarray(u, dtype=float))

    def sigma_prime(self, u):
        return self.sign * self.boundary.sigma_prime(self.sign * np.asarray(u, dtype=float))


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    double_well_ok: bool
    support_ok: bool
    lower_bound_margin: float
    kappa: float | None
    phase_values_ok: bool
    envelope_gap: float
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.double_well_ok
            and self.support_ok
            and self.lower_bound_margin >= -1e-12
            and self.kappa is not None
            and self.phase_values_ok
            and self.envelope_gap <= 1e-12
        )


def validate_assumptions(model: EnergyModel, samples: int = 10_001) -> AssumptionReport:
    """Check the standing assumptions on (W, sigma) for the normalized model."""
    boundary = model.boundary
    cos_a = boundary.cos_alpha
    messages: list[str] = []

    s = np.linspace(-1.5, 1.5, samples)
    W = model.W(s)
    double_well_ok = bool(
        np.all(W >= 0.0)
        and model.W(1.0) == 0.0
        and model.W(-1.0) == 0.0
        and model.W_prime(1.0) == 0.0
        and model.W_prime(-1.0) == 0.0
    )
    if not double_well_ok:
        messages.append("double well: zeros or sign violated")

    outside = s[np.abs(s) > 1.0]
    support_ok = bool(np.all(boundary.sigma_prime(outside) == 0.0))
    if not support_ok:
        messages.append("sigma' has support outside [-1, 1]")

    inner = np.linspace(-1.0, 1.0, samples)
    psi = eval_psi(inner)
    sig = boundary.sigma(inner)
    margin = float(np.min(sig - cos_a * psi))
    if margin < -1e-12:
        messages.append(f"sigma dips below cos(alpha) psi by {-margin:.3g}")

    positive = psi > 1e-12
    ratio_max = float(np.max(sig[positive] / psi[positive])) if positive.any() else 0.0
    kappa_max = 1.0 - ratio_max
    upper = 1.0 - cos_a
    kappa: float | None = None
    if kappa_max > 0 and upper > 0:
        kappa = 0.5 * min(kappa_max, upper)
    else:
        messages.append("no admissible kappa: sigma touches psi")

    phase_values_ok = bool(
        abs(float(boundary.sigma(-1.0))) <= 1e-12
        and abs(float(boundary.sigma(1.0)) - C0 * cos_a) <= 1e-12
    )
    if not phase_values_ok:
        messages.append("sigma(+-1) incompatible with c0 cos(alpha)")

    y = np.linspace(0.0, C0, ENVELOPE_SAMPLES)
    tau = boundary.sigma(psi_inverse(y))
    envelope_gap = float(np.max(np.abs(lipschitz_envelope(tau) - tau)))
    if envelope_gap > 1e-12:
        messages.append(f"relaxed density differs from sigma by {envelope_gap:.3g}")

    for message in messages:
        logger.warning("assumption check: %s", message)

    return AssumptionReport(
        double_well_ok=double_well_ok,
        support_ok=support_ok,
        lower_bound_margin=margin,
        kappa=kappa,
        phase_values_ok=phase_values_ok,
        envelope_gap=envelope_gap,
        messages=messages,
    )
