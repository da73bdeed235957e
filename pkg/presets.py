"""Experiment presets and save/load of user configs as INI files."""

from __future__ import annotations

from pathlib import Path

from config import ConfigError, ExperimentConfig

PRESETS_DIR = Path("saved_experiments")

# ---------------------------------------------------------------------------
# Built-in experiments
# ---------------------------------------------------------------------------

_CHORD = """
[domain]
lx = 1.0
ly = 1.0
[walls]
bottom = contact
top = contact
[model]
alpha_deg = 90
[phase_field]
eps = 0.05
[solver]
scheme = convex_splitting
t_end = 0.01
[initial]
geometry = chord
x0 = 0.5
[output]
name = stationary-chord
"""

# Accurate settings for the radius law: stabilized scheme, small tau
_HALF_DISK = """
[domain]
lx = 1.0
ly = 0.5
h = 0.005
[walls]
bottom = neumann
[phase_field]
eps = 0.02
[solver]
scheme = stabilized
stabilization = 2.0
tau_factor = 0.005
t_end = 0.02
[initial]
geometry = half_disk
radius = 0.3
center_x = 0.5
[output]
name = shrinking-half-disk
"""

# tau S / eps^2 = 0.005, the relative lag of the stabilized step
_TRANSLATOR = """
[domain]
lx = 1.0
ly = 0.5
[walls]
left = contact
right = contact
[model]
alpha_deg = 60
[phase_field]
eps = 0.01
[solver]
scheme = stabilized
stabilization = 2.0
tau_factor = 0.0025
t_end = 0.002
snapshot_stride = 400
[initial]
geometry = translator
y0 = 0.25
[output]
name = translator-60
"""

_HALF_DISK_SWEEP = """
[domain]
lx = 1.0
ly = 0.5
[walls]
bottom = neumann
[phase_field]
eps_list = 0.04 0.02 0.01
[solver]
scheme = stabilized
stabilization = 2.0
tau_factor = 0.005
t_end = 0.02
[initial]
geometry = half_disk
radius = 0.3
center_x = 0.5
[output]
name = half-disk-sweep
"""

_TRANSLATOR_SWEEP = """
[domain]
lx = 1.0
ly = 0.75
[walls]
left = contact
right = contact
[model]
alpha_deg = 60
[phase_field]
eps_list = 0.04 0.02 0.01
[solver]
scheme = stabilized
stabilization = 2.0
tau_factor = 0.0025
t_end = 0.002
[initial]
geometry = translator
y0 = 0.25
[output]
name = translator-sweep
"""

_PERTURBED_HALF_DISK = _HALF_DISK.replace("center_x = 0.5\n", "center_x = 0.5\nperturbation = 2.0\n").replace(
    "name = shrinking-half-disk", "name = perturbed-half-disk"
)

BUILTIN_PRESETS: dict[str, str] = {
    "Stationary chord (90 degrees)": _CHORD,
    "Shrinking half-disk": _HALF_DISK,
    "Perturbed half-disk (Gronwall)": _PERTURBED_HALF_DISK,
    "Translator at 60 degrees": _TRANSLATOR,
    "Half-disk sweep": _HALF_DISK_SWEEP,
    "Translator sweep": _TRANSLATOR_SWEEP,
}


def builtin(name: str) -> ExperimentConfig:
    if name not in BUILTIN_PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return ExperimentConfig.from_text(BUILTIN_PRESETS[name])


# ---------------------------------------------------------------------------
# Save / load
# ---------------------------------------------------------------------------

def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in " -_" else "_" for c in name)


def save_preset(name: str, config: ExperimentConfig, directory: Path | None = None) -> Path:
    """Save *config* as ``<name>.ini``. Returns the file path."""
    directory = PRESETS_DIR if directory is None else Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{_safe_name(name)}.ini"
    path.write_text(config.to_text())
    return path


def list_saved(directory: Path | None = None) -> list[str]:
    directory = PRESETS_DIR if directory is None else Path(directory)
    if not directory.exists():
        return []
    return sorted(p.stem for p in directory.glob("*.ini"))


def load_preset(name: str, directory: Path | None = None) -> ExperimentConfig:
    directory = PRESETS_DIR if directory is None else Path(directory)
    return ExperimentConfig.from_file(directory / f"{_safe_name(name)}.ini")
