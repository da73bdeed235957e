from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from potentials import (
    C0,
    AngleRangeError,
    BoundaryEnergy,
    EmptySamplesError,
    EnergyModel,
    NonWettingError,
    double_well_derivative,
    eval_double_well,
    eval_psi,
    lipschitz_envelope,
    optimal_profile,
    psi_inverse,
    validate_assumptions,
    young_angle,
)


def test_surface_tension_constant_is_integral_of_sqrt_2w():
    value, _ = quad(lambda s: math.sqrt(2.0 * eval_double_well(s)), -1.0, 1.0)
    assert value == pytest.approx(C0, abs=1e-12)


def test_double_well_zeros_and_derivative():
    assert eval_double_well(1.0) == 0.0
    assert eval_double_well(-1.0) == 0.0
    assert eval_double_well(0.0) == pytest.approx(0.5)
    s = np.linspace(-1.2, 1.2, 7)
    step = 1e-6
    numeric = (eval_double_well(s + step) - eval_double_well(s - step)) / (2 * step)
    np.testing.assert_allclose(double_well_derivative(s), numeric, atol=1e-6)


def test_psi_is_clamped_outside_unit_interval():
    assert eval_psi(-3.0) == pytest.approx(0.0)
    assert eval_psi(2.0) == pytest.approx(C0)
    assert eval_psi(0.0) == pytest.approx(0.5 * C0)


def test_psi_inverse_undoes_psi():
    s = np.linspace(-1.0, 1.0, 401)
    np.testing.assert_allclose(psi_inverse(eval_psi(s)), s, atol=1e-6)


def test_optimal_profile_is_tanh_and_rejects_bad_eps():
    assert optimal_profile(0.1, 0.1) == pytest.approx(math.tanh(1.0))
    with pytest.raises(ValueError):
        optimal_profile(0.0, 0.0)


def test_boundary_energy_is_cubic_with_compact_derivative():
    energy = BoundaryEnergy(math.pi / 3)
    assert energy.sigma(-1.0) == pytest.approx(0.0)
    assert energy.sigma(1.0) == pytest.approx(0.5 * C0)
    np.testing.assert_allclose(energy.sigma_prime(np.array([-2.0, 1.5])), 0.0)
    assert energy.sigma_prime(0.0) == pytest.approx(0.5)


def test_boundary_energy_rejects_obtuse_angle():
    with pytest.raises(AngleRangeError):
        BoundaryEnergy(2.0)


def test_right_angle_is_neumann():
    energy = BoundaryEnergy(math.pi / 2)
    assert energy.neumann
    assert energy.cos_alpha == 0.0


def test_two_pass_envelope_matches_brute_force(rng):
    values = rng.normal(size=500)
    positions = np.sort(rng.uniform(0.0, C0, size=500))
    fast = lipschitz_envelope(values, positions)
    slow = lipschitz_envelope(values, positions, method="brute_force")
    np.testing.assert_allclose(fast, slow, atol=1e-12)


def test_envelope_is_one_lipschitz_and_below_samples(rng):
    values = rng.normal(scale=3.0, size=300)
    positions = np.linspace(0.0, C0, 300)
    envelope = lipschitz_envelope(values, positions)
    assert np.all(envelope <= values + 1e-15)
    slopes = np.abs(np.diff(envelope)) / np.diff(positions)
    assert slopes.max() <= 1.0 + 1e-9


def test_envelope_leaves_lipschitz_data_unchanged():
    positions = np.linspace(0.0, C0, 50)
    values = 0.3 * positions
    np.testing.assert_allclose(lipschitz_envelope(values, positions), values)


def test_envelope_input_errors():
    with pytest.raises(EmptySamplesError):
        lipschitz_envelope([])
    with pytest.raises(ValueError):
        lipschitz_envelope([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        lipschitz_envelope([1.0, 2.0], method="fancy")


def test_young_angle():
    assert young_angle(0.5 * C0) == pytest.approx(math.pi / 3)
    assert young_angle(0.0) == pytest.approx(math.pi / 2)
    with pytest.raises(NonWettingError):
        young_angle(C0)
    with pytest.raises(NonWettingError):
        young_angle(-0.1)


def test_energy_model_acute_angle(model_60):
    assert not model_60.swapped
    assert model_60.jump == pytest.approx(0.5 * C0, abs=1e-10)
    assert model_60.young_angle == pytest.approx(math.pi / 3, abs=1e-9)
    assert model_60.sigma_floor == pytest.approx(0.0)
    assert model_60.boundary_stiffness == pytest.approx(1.0)


def test_energy_model_swaps_phases_for_obtuse_angle():
    model = EnergyModel.from_angle(2 * math.pi / 3)
    assert model.swapped
    assert model.sign == -1.0
    assert model.jump == pytest.approx(-0.5 * C0, abs=1e-10)
    assert model.sigma_floor == pytest.approx(0.5 * C0)
    assert model.cos_alpha == pytest.approx(-0.5)
    assert model.young_angle == pytest.approx(2 * math.pi / 3, abs=1e-9)


def test_energy_model_rejects_angles_outside_open_interval():
    for alpha in (0.0, math.pi, -1.0):
        with pytest.raises(AngleRangeError):
            EnergyModel.from_angle(alpha)


@pytest.mark.parametrize("alpha", [math.pi / 6, math.pi / 3, math.pi / 2])
def test_standing_assumptions_hold_for_standard_density(alpha):
    report = validate_assumptions(EnergyModel.from_angle(alpha))
    assert report.ok, report.messages
    assert report.kappa is not None and report.kappa > 0
