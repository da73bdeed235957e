"""Phase-field run browser: Streamlit entry point.

Reads finished runs from the output directory; simulations themselves are
started with the ``phasefield`` command.
"""

from __future__ import annotations

from pathlib import Path

import streamlit as st

from config import ConfigError, ExperimentConfig, Settings
from presets import BUILTIN_PRESETS, list_saved, load_preset, save_preset
from reports import read_csv, read_json

st.set_page_config(
    page_title="Phase-field Runs",
    page_icon=":ocean:",
    layout="wide",
)

RUN_FILES = ("energy_ledger", "stability", "diagnostics", "interface", "motion_law", "convergence")

# ---------------------------------------------------------------------------
# Load settings
# ---------------------------------------------------------------------------

try:
    settings = Settings.from_env()
except ConfigError as exc:
    st.error(str(exc))
    st.stop()


def _run_dirs(root: Path) -> list[Path]:
    if not root.exists():
        return []
    return sorted(p.parent for p in root.glob("**/summary.json"))


# ---------------------------------------------------------------------------
# Sidebar: run selector
# ---------------------------------------------------------------------------

st.sidebar.title("Phase-field Runs")

root = Path(st.sidebar.text_input("Output directory", value=str(settings.output_dir)))
runs = _run_dirs(root)

if not runs:
    st.sidebar.warning(f"No runs under `{root}`. Use `phasefield simulate --config ...` first.")
else:
    labels = [str(p.relative_to(root)) or "." for p in runs]
    chosen = st.sidebar.selectbox("Run", labels)
    if st.sidebar.button("Load run", type="primary"):
        run_dir = runs[labels.index(chosen)]
        frames = {}
        for name in RUN_FILES:
            path = run_dir / f"{name}.csv"
            if path.exists():
                frames[name] = read_csv(path).drop(columns="schema_version", errors="ignore")
        st.session_state.run_dir = run_dir
        st.session_state.run_frames = frames
        st.session_state.run_summary = read_json(run_dir / "summary.json")
        geometry = run_dir / "geometry.json"
        st.session_state.run_geometry = read_json(geometry) if geometry.exists() else {}
        st.sidebar.success(f"Loaded {len(frames)} tables from {chosen}.")

# ---------------------------------------------------------------------------
# Sidebar: experiment presets and save/load
# ---------------------------------------------------------------------------

st.sidebar.header("Experiments")

preset_options = list(BUILTIN_PRESETS.keys()) + [f"Saved: {n}" for n in list_saved()]
chosen_preset = st.sidebar.selectbox("Preset / saved", preset_options)
if chosen_preset.startswith("Saved: "):
    preset_text = load_preset(chosen_preset.removeprefix("Saved: ")).to_text()
else:
    preset_text = BUILTIN_PRESETS[chosen_preset].strip() + "\n"

with st.sidebar.expander("Edit and save"):
    edited = st.text_area("INI", value=preset_text, height=320, key=f"ini_{chosen_preset}")
    save_name = st.text_input("Name", key="save_name")
    if st.button("Save") and save_name:
        try:
            path = save_preset(save_name, ExperimentConfig.from_text(edited, name=save_name))
            st.success(f"Saved as `{path}`")
        except ConfigError as exc:
            st.error(f"Invalid experiment: {exc}")

# ---------------------------------------------------------------------------
# Main area: landing page
# ---------------------------------------------------------------------------

st.title("Phase-field Runs")

if "run_frames" not in st.session_state:
    st.info("Pick a run in the sidebar and click **Load run**.")
else:
    summary = st.session_state.run_summary
    st.write(f"Run directory: `{st.session_state.run_dir}`")
    cols = st.columns(4)
    cols[0].metric("eps", summary.get("eps", "-"))
    cols[1].metric("h", summary.get("h", "-"))
    cols[2].metric("scheme", summary.get("scheme", "-"))
    checks = summary.get("checks")
    if checks:
        passed = sum(bool(v) for v in checks.values())
        cols[3].metric("checks", f"{passed}/{len(checks)}")
    with st.expander("summary.json"):
        st.json(summary)
