from __future__ import annotations

import pytest

from config import ConfigError
from presets import BUILTIN_PRESETS, builtin, list_saved, load_preset, save_preset


@pytest.mark.parametrize("name", sorted(BUILTIN_PRESETS))
def test_builtin_presets_parse(name):
    config = builtin(name)
    assert config.eps > 0
    assert config.reference_kind() is not None


def test_sweep_presets_have_decreasing_eps():
    assert builtin("Half-disk sweep").eps_list == (0.04, 0.02, 0.01)
    assert builtin("Perturbed half-disk (Gronwall)").perturbation == 2.0


def test_unknown_preset():
    with pytest.raises(ConfigError):
        builtin("Spiral")


def test_save_and_load(tmp_path, chord_config):
    path = save_preset("my chord (v2)", chord_config, directory=tmp_path)
    assert path.exists()
    assert list_saved(tmp_path) == [path.stem]
    assert load_preset("my chord (v2)", directory=tmp_path) == chord_config


def test_list_saved_on_missing_directory(tmp_path):
    assert list_saved(tmp_path / "nothing") == []
