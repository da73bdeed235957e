from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

import harness
from config import ConfigError, Settings
from diagnostics import check_admissible
from domain_grid import build_grid
from potentials import C0, NonWettingError, eval_psi
from reports import read_csv, read_json

RUN_FILES = (
    "energy_ledger.csv", "interface.csv", "stability.csv", "diagnostics.csv",
    "motion_law.csv", "geometry.json", "summary.json",
)


@pytest.fixture
def sigma_table(tmp_path):
    def write(sigma_of_s, s=None):
        s = np.linspace(-1.0, 1.0, 201) if s is None else s
        path = tmp_path / "sigma.csv"
        pd.DataFrame({"s": s, "sigma": sigma_of_s(s)}).to_csv(path, index=False)
        return path

    return write


def test_initial_signed_distance_by_geometry(chord_config, half_disk_config):
    grid = build_grid(1.0, 1.0, 0.025)
    X, Y = grid.mesh()
    np.testing.assert_allclose(harness.initial_signed_distance(chord_config, grid), 0.5 - X)

    disk_grid = build_grid(1.0, 0.5, 0.01)
    DX, DY = disk_grid.mesh()
    sd = harness.initial_signed_distance(half_disk_config, disk_grid)
    np.testing.assert_allclose(sd, np.hypot(DX - 0.5, DY) - 0.3)

    expression = replace(chord_config, geometry="expression", expression="x - 0.25")
    np.testing.assert_allclose(harness.initial_signed_distance(expression, grid), X - 0.25)


def test_constant_expression_broadcasts(chord_config):
    grid = build_grid(1.0, 1.0, 0.025)
    config = replace(chord_config, geometry="expression", expression="1")
    assert harness.initial_signed_distance(config, grid).shape == grid.shape


def test_expression_with_unknown_symbol(chord_config):
    config = replace(chord_config, geometry="expression", expression="x + z")
    with pytest.raises(ConfigError):
        harness.initial_signed_distance(config, build_grid(1.0, 1.0, 0.025))


def test_perturbation_pushes_interface_outward(chord_config):
    grid = build_grid(1.0, 1.0, 0.025)
    plain = harness.initial_signed_distance(chord_config, grid)
    bumped = harness.initial_signed_distance(replace(chord_config, perturbation=2.0), grid)
    shift = plain - bumped
    assert np.all(shift >= 0.0)
    assert shift.max() <= 2.0 * grid.h
    assert shift.max() > 1.5 * grid.h


@pytest.mark.parametrize("walls", [("bottom", "top"), ("left", "right", "bottom", "top")])
def test_default_pair_is_admissible(chord_config, walls):
    config = replace(
        chord_config,
        alpha=math.pi / 3,
        walls={w: ("contact" if w in walls else "neumann") for w in ("left", "right", "bottom", "top")},
    )
    model = harness.build_model(config)
    grid = build_grid(1.0, 1.0, 0.025)
    check_admissible(harness.default_pair(config, model), grid, harness.build_walls(config, model))


def test_simulate_chord_writes_all_outputs(isolated_env, chord_config):
    out = isolated_env / "chord"
    summary = harness.cmd_simulate(chord_config, out, Settings.from_env())
    for name in RUN_FILES:
        assert (out / name).exists(), name
    for name in RUN_FILES[:5]:
        assert (out / name).read_text().startswith("schema_version")

    geometry = read_json(out / "geometry.json")
    assert geometry["schema_version"] == 1
    assert geometry["measured_radius"] is None
    assert geometry["reference"]["kind"] == "stationary_chord"

    stability = read_csv(out / "stability.csv")
    assert stability["t"].iloc[-1] == pytest.approx(0.025)
    assert stability["bulk_error"].max() == pytest.approx(0.0)
    ledger = read_csv(out / "energy_ledger.csv")
    assert len(ledger) == 11
    assert summary["calibration"]["ell"] == pytest.approx(0.125)
    assert "checks" not in summary


def test_simulate_reuses_cache(isolated_env, chord_config, monkeypatch):
    settings = Settings.from_env()
    harness.cmd_simulate(chord_config, isolated_env / "a", settings)

    def fail(*args, **kwargs):
        raise AssertionError("cached run should not be integrated again")

    monkeypatch.setattr("cache.run", fail)
    harness.cmd_simulate(chord_config, isolated_env / "b", settings)
    assert (settings.cache_dir / "checkpoints" / chord_config.digest()).is_dir()


def test_simulate_half_disk_measures_radius(isolated_env, half_disk_config):
    out = isolated_env / "disk"
    summary = harness.cmd_simulate(half_disk_config, out, Settings.from_env(), use_cache=False)
    geometry = read_json(out / "geometry.json")
    assert geometry["measured_radius"][0] == pytest.approx(0.3, abs=0.01)
    assert "radius_law" in summary
    assert all(n == 2 for n in geometry["contact_points"])


def test_acceptance_failure_still_writes_outputs(isolated_env, chord_config, monkeypatch):
    monkeypatch.setattr(harness, "acceptance_checks", lambda result: {"energy_monotone": False})
    out = isolated_env / "failing"
    with pytest.raises(harness.AcceptanceError) as info:
        harness.cmd_simulate(chord_config, out, Settings.from_env(), check=True)
    assert info.value.failed == ["energy_monotone"]
    assert read_json(out / "summary.json")["checks"] == {"energy_monotone": False}


def test_verify_calibration_of_chord(tmp_path, chord_config):
    report = harness.cmd_verify_calibration(chord_config, tmp_path)
    assert report["passed"]
    assert report["failed"] == []
    assert len(report["conditions"]) == 10
    assert read_json(tmp_path / "calibration.json")["passed"] is True


def test_corrupted_calibration_fails_length(tmp_path, chord_config):
    report = harness.cmd_verify_calibration(chord_config, tmp_path, seed=3, corrupt=True)
    assert not report["passed"]
    assert report["failed"] == ["xi_length"]
    assert 1.05 <= report["xi_scale"] <= 1.06


def test_verify_calibration_needs_reference(tmp_path, chord_config):
    with pytest.raises(ConfigError):
        harness.cmd_verify_calibration(replace(chord_config, reference="none"), tmp_path)


def test_envelope_of_standard_density(tmp_path, sigma_table):
    path = sigma_table(lambda s: math.cos(math.pi / 3) * eval_psi(s))
    summary = harness.cmd_envelope(path, tmp_path / "env")
    assert summary["jump"] == pytest.approx(0.5 * C0)
    assert summary["young_angle_rad"] == pytest.approx(math.pi / 3)
    assert not summary["relaxed"]
    assert summary["brute_force_difference"] == pytest.approx(0.0, abs=1e-12)
    assert (tmp_path / "env" / "sigma_hat.csv").exists()


def test_envelope_of_constant_density(tmp_path, sigma_table):
    summary = harness.cmd_envelope(sigma_table(lambda s: np.full_like(s, 0.3)), tmp_path / "env")
    assert summary["jump"] == pytest.approx(0.0)
    assert summary["young_angle_rad"] == pytest.approx(math.pi / 2)


def test_envelope_of_steep_density_is_non_wetting(tmp_path, sigma_table):
    out = tmp_path / "env"
    with pytest.raises(NonWettingError):
        harness.cmd_envelope(sigma_table(lambda s: 2.0 * eval_psi(s)), out)
    envelope = read_json(out / "envelope.json")
    assert envelope["non_wetting"] is True
    assert envelope["relaxed"] is True
    assert envelope["jump"] == pytest.approx(C0)


def test_envelope_rejects_unsorted_grid(tmp_path, sigma_table):
    s = np.array([-1.0, 0.5, 0.0, 1.0])
    with pytest.raises(ConfigError):
        harness.cmd_envelope(sigma_table(lambda v: v, s=s), tmp_path / "env")
    with pytest.raises(ConfigError):
        harness.cmd_envelope(tmp_path / "absent.csv", tmp_path / "env")


def test_report_rerenders_summary_and_html(isolated_env, chord_config):
    out = isolated_env / "chord"
    harness.cmd_simulate(chord_config, out, Settings.from_env())
    (out / "summary.json").unlink()
    summary = harness.cmd_report(out, html=True)
    assert summary["ledger"]["steps"] == 10
    assert (out / "summary.json").exists()
    assert "plotly" in (out / "report.html").read_text()


def test_report_on_empty_directory(tmp_path):
    with pytest.raises(ConfigError):
        harness.cmd_report(tmp_path)


def test_sweep_with_single_eps_has_no_orders(isolated_env, chord_config):
    out = isolated_env / "sweep"
    table = harness.cmd_sweep(chord_config, out, Settings.from_env(), threads=1)
    assert len(table) == 1
    assert not any(c.endswith("_order") for c in table.columns)
    assert not table["partial"].any()
    assert (out / "eps_0.1" / "summary.json").exists()
    assert read_csv(out / "convergence.csv")["eps"].tolist() == [0.1]
    assert read_json(out / "summary.json")["decreasing"] == {}


@pytest.mark.slow
def test_sweep_over_two_eps_reports_orders(isolated_env, chord_config):
    config = replace(chord_config, h=None, tau=None, eps_list=(0.1, 0.05))
    table = harness.cmd_sweep(config, isolated_env / "sweep", Settings.from_env(), threads=1)
    assert table["eps"].tolist() == [0.1, 0.05]
    assert "energy_gap_order" in table.columns
    assert table["radius_or_speed_error"].max() < 0.02


def test_failing_sweep_member_writes_partial_table(isolated_env, chord_config, monkeypatch):
    config = replace(chord_config, eps_list=(0.2, 0.1))

    def member(config, eps, out_dir, cache_dir, check):
        if eps < 0.15:
            raise RuntimeError("solver diverged")
        return {"eps": eps, "h": 0.025, "energy_gap": 0.1}

    monkeypatch.setattr(harness, "_sweep_member", member)
    out = isolated_env / "sweep"
    with pytest.raises(RuntimeError):
        harness.cmd_sweep(config, out, Settings.from_env(), threads=1)
    written = read_csv(out / "convergence.csv")
    assert written["eps"].tolist() == [0.2]
    assert written["partial"].all()
    assert read_json(out / "summary.json")["completed"] == 1
