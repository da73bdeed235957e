from __future__ import annotations

import math
from dataclasses import replace

import pytest

from config import ConfigError, ExperimentConfig, Settings


def test_defaults_from_minimal_file():
    config = ExperimentConfig.from_text("[domain]\nlx = 2.0\n")
    assert config.lx == 2.0
    assert config.ly == 1.0
    assert config.alpha == pytest.approx(math.pi / 2)
    assert config.contact_walls == ()
    assert config.spacing() == pytest.approx(0.25 * 0.05)
    assert config.time_step() == pytest.approx(0.25 * 0.05**2)
    assert config.reference_kind() == "stationary_chord"


def test_alpha_in_degrees(chord_config):
    assert chord_config.alpha == pytest.approx(math.pi / 2)
    assert chord_config.contact_walls == ("bottom", "top")
    assert chord_config.name == "tiny-chord"
    config = ExperimentConfig.from_text("[model]\nalpha_deg = 60\n[reference]\nflow = none\n")
    assert config.alpha == pytest.approx(math.pi / 3)
    assert config.reference_kind() is None


@pytest.mark.parametrize(
    "text",
    [
        "[model]\nalpha = 1.0\nalpha_deg = 60\n",
        "[model]\nalpha_deg = 200\n",
        "[walls]\nfront = contact\n",
        "[walls]\nleft = sticky\n",
        "[phase_field]\neps_list = 0.02 0.04\n",
        "[domain]\nh = 0.05\n[phase_field]\neps = 0.1\n",
        "[solver]\nscheme = explicit\n",
        "[solver]\nt_end = abc\n",
        "[initial]\ngeometry = expression\n",
        "[reference]\nflow = strip_translator\n",
        "[walls]\nbottom = contact\n[model]\nalpha_deg = 60\n",
        "[domain\nlx = 1\n",
    ],
)
def test_invalid_files_raise_config_error(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "absent.ini")


def test_file_name_is_default_experiment_name(tmp_path):
    path = tmp_path / "my-run.ini"
    path.write_text("[phase_field]\neps_list = 0.04, 0.02\n")
    config = ExperimentConfig.from_file(path)
    assert config.name == "my-run"
    assert config.eps_list == (0.04, 0.02)
    assert config.with_eps(0.02).eps == 0.02


def test_text_roundtrip(chord_config, half_disk_config):
    for config in (chord_config, half_disk_config, replace(chord_config, snapshot_stride=4, y0=0.3)):
        assert ExperimentConfig.from_text(config.to_text()) == config


def test_digest_ignores_end_time_only(chord_config):
    longer = replace(chord_config, t_end=1.0, name="other")
    assert longer.digest() == chord_config.digest()
    assert chord_config.digest(0.2) != chord_config.digest()
    assert replace(chord_config, alpha=1.0).digest() != chord_config.digest()


def test_solver_config_uses_explicit_tau(chord_config):
    cfg = chord_config.solver_config(t_end=0.5)
    assert cfg.tau == pytest.approx(0.0025)
    assert cfg.t_end == 0.5
    assert cfg.scheme == "convex_splitting"


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("PHASEFIELD_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("PHASEFIELD_THREADS", "4")
    monkeypatch.setenv("PHASEFIELD_LOG_LEVEL", "debug")
    settings = Settings.from_env()
    assert settings.output_dir == tmp_path / "out"
    assert settings.threads == 4
    assert settings.log_level == "DEBUG"


def test_settings_reject_non_integer_threads(monkeypatch):
    monkeypatch.setenv("PHASEFIELD_THREADS", "many")
    with pytest.raises(ConfigError):
        Settings.from_env()
