from __future__ import annotations

import math

import numpy as np
import pytest

from domain_grid import build_grid, make_walls
from models import PhaseField, SolverConfig
from potentials import C0, EnergyModel
from solver import (
    SemiImplicitStepper,
    StabilityCapError,
    allen_cahn_rhs,
    default_stride,
    discrete_energy,
    energy_parts,
    run,
    step,
    step_count,
    weak_form_residual,
    well_prepared,
)


def test_step_count_and_stride():
    assert step_count(0.0, SolverConfig(tau=0.1, t_end=1.0)) == 10
    assert step_count(0.5, SolverConfig(tau=0.1, t_end=1.0)) == 5
    assert step_count(2.0, SolverConfig(tau=0.1, t_end=1.0)) == 0
    assert default_stride(1000) == 6
    assert default_stride(10) == 1


def test_constant_state_has_pure_boundary_energy(unit_grid, model_60):
    walls = make_walls(model_60, contact=("left", "bottom"))
    bulk, boundary = energy_parts(np.ones(unit_grid.shape), unit_grid, 0.1, walls)
    assert bulk == pytest.approx(0.0)
    assert boundary == pytest.approx(C0)


def test_boundary_energy_uses_adjacent_cell_values(unit_grid, model_60):
    X, _ = unit_grid.mesh()
    u = np.clip(2.0 * X - 0.3, -1.0, 1.0)
    walls = make_walls(model_60, contact=("left",))
    _, boundary = energy_parts(u, unit_grid, 0.1, walls)
    expected = unit_grid.h * float(np.sum(model_60.sigma(u[0, :])))
    assert boundary == pytest.approx(expected, rel=1e-14)
    extrapolated = unit_grid.h * float(np.sum(model_60.sigma(1.5 * u[0, :] - 0.5 * u[1, :])))
    assert abs(boundary - extrapolated) > 1e-3


def test_energy_of_minus_one_state_is_zero(unit_grid, model_60):
    walls = make_walls(model_60, contact=("left", "right", "bottom", "top"))
    state = PhaseField(-np.ones(unit_grid.shape), unit_grid, eps=0.1)
    assert discrete_energy(state, walls) == pytest.approx(0.0, abs=1e-14)


def test_stabilized_scheme_enforces_step_cap(unit_grid, neumann_walls):
    eps = 0.125
    with pytest.raises(StabilityCapError):
        SemiImplicitStepper(unit_grid, eps, neumann_walls, SolverConfig(tau=eps**2, t_end=1.0, scheme="stabilized"))
    with pytest.raises(StabilityCapError):
        SemiImplicitStepper(
            unit_grid, eps, neumann_walls,
            SolverConfig(tau=0.1 * eps**2, t_end=1.0, scheme="stabilized", stabilization=1.0),
        )
    with pytest.raises(StabilityCapError):
        SemiImplicitStepper(unit_grid, eps, neumann_walls, SolverConfig(tau=-1.0, t_end=1.0))


def test_unknown_scheme(unit_grid, neumann_walls):
    with pytest.raises(ValueError):
        SemiImplicitStepper(unit_grid, 0.125, neumann_walls, SolverConfig(tau=1e-3, t_end=1.0, scheme="explicit"))


def test_step_advances_time(random_state, neumann_walls):
    nxt = step(random_state, SolverConfig(tau=1e-3, t_end=1.0), neumann_walls)
    assert nxt.t == pytest.approx(1e-3)
    assert nxt.values.shape == random_state.values.shape


@pytest.mark.parametrize("contact", [(), ("left", "bottom")])
def test_convex_splitting_decreases_energy_on_random_data(random_state, model_60, contact):
    walls = make_walls(model_60 if contact else None, contact=contact)
    eps = random_state.eps
    cfg = SolverConfig(tau=eps**2 / 4, t_end=20 * eps**2 / 4)
    trajectory = run(random_state, cfg, walls)
    E = trajectory.ledger["E_eps"].to_numpy()
    assert len(E) == 21
    assert np.all(np.diff(E) <= 1e-10 * (1 + np.abs(E[:-1])))
    assert trajectory.max_abs <= 1.0 + 1e-8


def test_stabilized_scheme_decreases_energy(random_state, neumann_walls):
    eps = random_state.eps
    cfg = SolverConfig(tau=0.5 * eps**2, t_end=10 * 0.5 * eps**2, scheme="stabilized", stabilization=2.0)
    E = run(random_state, cfg, neumann_walls).ledger["E_eps"].to_numpy()
    assert np.all(np.diff(E) <= 1e-10 * (1 + np.abs(E[:-1])))


def test_ledger_closes(random_state, neumann_walls):
    eps = random_state.eps
    trajectory = run(random_state, SolverConfig(tau=eps**2 / 4, t_end=eps**2), neumann_walls)
    ledger = trajectory.ledger
    drop = ledger["E_eps"].iloc[0] - ledger["E_eps"].iloc[-1]
    accounted = ledger["dissipation_increment"].sum() + ledger["numerical_dissipation"].sum()
    assert drop == pytest.approx(accounted, rel=1e-12, abs=1e-12)
    assert np.all(ledger["dissipation_increment"] >= 0)
    np.testing.assert_allclose(ledger["E_eps"], ledger["bulk_E"] + ledger["boundary_E"])


def test_run_keeps_first_and_last_snapshot(random_state, neumann_walls):
    eps = random_state.eps
    cfg = SolverConfig(tau=eps**2 / 4, t_end=7 * eps**2 / 4, snapshot_stride=3)
    trajectory = run(random_state, cfg, neumann_walls)
    steps_at = [round(t / cfg.tau) for t in trajectory.times]
    assert steps_at == [0, 3, 6, 7]
    assert not trajectory.final.values.flags.writeable


def test_run_rejects_out_of_range_data(unit_grid, neumann_walls):
    state = PhaseField(np.full(unit_grid.shape, 1.5), unit_grid, eps=0.125)
    with pytest.raises(ValueError):
        run(state, SolverConfig(tau=1e-3, t_end=1e-2), neumann_walls)


def test_well_prepared_profile_is_tanh():
    grid = build_grid(1.0, 1.0, 1.0 / 16)
    X, _ = grid.mesh()
    state = well_prepared(grid, 0.1, 0.5 - X)
    np.testing.assert_allclose(state.values, np.tanh((X - 0.5) / 0.1))


def test_optimal_profile_is_nearly_stationary():
    grid = build_grid(1.0, 0.5, 1.0 / 128)
    X, _ = grid.mesh()
    eps = 0.05
    state = well_prepared(grid, eps, 0.5 - X)
    rhs = allen_cahn_rhs(state, make_walls())
    # discrete residual of the 1D profile is O(h^2 / eps^4) against W'/eps^2 ~ 1/eps^2
    assert np.max(np.abs(rhs)) * eps**2 < 0.05


def test_weak_form_residual_is_small_for_resolved_run():
    grid = build_grid(1.0, 1.0, 1.0 / 32)
    model = EnergyModel.from_angle(math.pi / 3)
    walls = make_walls(model, contact=("bottom",))
    X, Y = grid.mesh()
    eps = 0.125
    u0 = well_prepared(grid, eps, np.hypot(X - 0.5, Y) - 0.4)
    tau = eps**2 / 256
    trajectory = run(u0, SolverConfig(tau=tau, t_end=32 * tau), walls)
    scale = np.sum(np.abs(trajectory.final.values - trajectory.initial.values)) * grid.h**2
    residual = weak_form_residual(trajectory, lambda x, y, t: np.ones_like(x))
    assert residual < 0.1 * scale


def test_phase_swap_equivariance(random_state):
    cfg = SolverConfig(tau=1e-3, t_end=1.0)
    acute = make_walls(EnergyModel.from_angle(math.pi / 3), contact=("left", "bottom"))
    obtuse = make_walls(EnergyModel.from_angle(2 * math.pi / 3), contact=("left", "bottom"))
    forward = step(random_state, cfg, acute)
    mirrored = step(PhaseField(-random_state.values, random_state.grid, eps=random_state.eps), cfg, obtuse)
    np.testing.assert_allclose(mirrored.values, -forward.values, atol=1e-12)


@pytest.mark.parametrize("phase", [1.0, -1.0])
@pytest.mark.parametrize("alpha", [math.pi / 3, math.pi / 2, 2 * math.pi / 3])
@pytest.mark.parametrize("scheme", ["convex_splitting", "stabilized"])
def test_pure_phases_are_fixed_by_one_step(unit_grid, phase, alpha, scheme):
    eps = 0.125
    walls = make_walls(EnergyModel.from_angle(alpha), contact=("left", "right", "bottom", "top"))
    state = PhaseField(np.full(unit_grid.shape, phase), unit_grid, eps=eps)
    nxt = step(state, SolverConfig(tau=0.25 * eps**2, t_end=1.0, scheme=scheme), walls)
    np.testing.assert_allclose(nxt.values, phase, atol=1e-10)
