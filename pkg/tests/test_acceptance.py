"""End-to-end acceptance runs against the reference laws (marked slow)."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

import analysis
import harness
from diagnostics import defects
from domain_grid import build_grid, make_walls
from models import PhaseField, SolverConfig
from potentials import EnergyModel
from presets import builtin
from solver import discrete_energy, run, well_prepared

pytestmark = pytest.mark.slow

RANDOM_STATES = 50


def test_random_states_dissipate_and_stay_in_range():
    grid = build_grid(1.0, 1.0, 1.0 / 64.0)
    eps = 0.05
    walls = make_walls(EnergyModel.from_angle(math.pi / 3), contact=("left", "bottom"))
    cfg = SolverConfig(tau=0.25 * eps**2, t_end=200 * 0.25 * eps**2, scheme="convex_splitting")
    rng = np.random.default_rng(2024)
    for _ in range(RANDOM_STATES):
        u0 = PhaseField(rng.uniform(-1.0, 1.0, grid.shape), grid, eps=eps)
        traj = run(u0, cfg, walls)
        E = traj.ledger["E_eps"].to_numpy()
        assert len(E) == 201
        assert np.all(np.diff(E) <= 1e-8 * (1.0 + np.abs(E[:-1])))
        assert analysis.summarize_ledger(traj.ledger)["ledger_closure"] <= 0.01
        assert traj.max_abs <= 1.0 + 1e-8


def test_half_disk_follows_radius_law():
    result = harness.simulate(builtin("Shrinking half-disk"))
    fit = harness.run_summary(result)["radius_law"]
    assert fit["max_rel_error"] <= 0.02


def test_translator_speed_and_contact_angle():
    result = harness.simulate(builtin("Translator at 60 degrees"))
    translation = harness.run_summary(result)["translation"]
    assert translation["expected"] == pytest.approx(math.pi / 3)
    assert translation["speed"] == pytest.approx(math.pi / 3, rel=0.05)
    angle = result.stability.frame["contact_angle"].iloc[-1]
    assert abs(angle - math.pi / 3) <= 0.05


def _half_disk_defects(eps: float, h: float) -> tuple[float, float, float]:
    config = replace(builtin("Shrinking half-disk"), h=h, eps_list=(eps,))
    grid = build_grid(config.lx, config.ly, h)
    flow = harness.build_reference_flow(config)
    state = well_prepared(grid, eps, harness.initial_signed_distance(config, grid, flow))
    model = harness.build_model(config)
    walls = harness.build_walls(config, model)
    report = defects(state, harness.default_pair(config, model), walls)
    return report.equipartition, report.boundary_defect, discrete_energy(state, walls)


def test_well_prepared_defects_shrink_under_refinement():
    # h / eps halves along with eps
    coarse_eq, coarse_bd, coarse_E = _half_disk_defects(0.02, 0.005)
    fine_eq, fine_bd, fine_E = _half_disk_defects(0.01, 0.00125)
    assert coarse_eq <= 0.03 * coarse_E
    assert fine_eq <= 0.03 * fine_E
    assert abs(coarse_bd) <= 1e-12 and abs(fine_bd) <= 1e-12
    assert coarse_eq / coarse_E >= 1.5 * (fine_eq / fine_E)


def test_motion_law_residual_shrinks_with_eps():
    config = replace(builtin("Half-disk sweep"), t_end=0.005)
    residuals = [harness.convergence_row(harness.simulate(config, eps=eps))["motion_law_residual"]
                 for eps in config.eps_list]
    assert config.eps_list == (0.04, 0.02, 0.01)
    for coarse, fine in zip(residuals, residuals[1:]):
        assert coarse >= 1.5 * fine


@pytest.mark.parametrize("preset", ["Shrinking half-disk", "Translator at 60 degrees", "Stationary chord (90 degrees)"])
def test_calibrations_pass_on_fine_grid(tmp_path, preset):
    config = replace(builtin(preset), h=1.0 / 256.0, eps_list=(0.02,))
    report = harness.cmd_verify_calibration(config, tmp_path)
    assert report["passed"], report["failed"]


@pytest.mark.parametrize("preset", ["Shrinking half-disk", "Stationary chord (90 degrees)"])
def test_corrupted_calibration_fails_only_length_on_fine_grid(tmp_path, preset):
    config = replace(builtin(preset), h=1.0 / 256.0, eps_list=(0.02,))
    report = harness.cmd_verify_calibration(config, tmp_path, seed=7, corrupt=True)
    assert report["failed"] == ["xi_length"]


def test_corrupted_translator_calibration_fails_length(tmp_path):
    # scaling xi also moves xi . n off cos(alpha) on the contact walls
    config = replace(builtin("Translator at 60 degrees"), h=1.0 / 256.0, eps_list=(0.02,))
    report = harness.cmd_verify_calibration(config, tmp_path, seed=7, corrupt=True)
    assert "xi_length" in report["failed"]
    assert not report["passed"]


def test_perturbed_half_disk_gronwall_constant_is_stable():
    config = replace(builtin("Perturbed half-disk (Gronwall)"), h=None, t_end=0.005)
    reports = [harness.simulate(config, eps=eps).gronwall for eps in (0.02, 0.01)]
    for report in reports:
        assert report.passed
        assert report.smallest_C_relEn <= report.C
    coarse, fine = (r.C for r in reports)
    assert 0.5 <= coarse / fine <= 2.0
