"""Plotly chart builders for run outputs."""

from __future__ import annotations

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

SERIES_COLOURS = px.colors.qualitative.Set2
SNAPSHOT_SCALE = px.colors.sequential.Viridis

_DASH_STYLES = ["solid", "dash", "dot", "dashdot", "longdash", "longdashdot"]


def _colour(i: int) -> str:
    return SERIES_COLOURS[i % len(SERIES_COLOURS)]


# ---------------------------------------------------------------------------
# Energy ledger
# ---------------------------------------------------------------------------

def plot_energy_ledger(ledger: pd.DataFrame) -> go.Figure:
    """E_eps with its bulk and boundary parts over time, cumulative dissipation on a second axis."""
    fig = go.Figure()
    for i, column in enumerate(("E_eps", "bulk_E", "boundary_E")):
        if column not in ledger:
            continue
        fig.add_trace(
            go.Scatter(
                x=ledger["t"],
                y=ledger[column],
                mode="lines",
                name=column,
                line=dict(color=_colour(i), dash=_DASH_STYLES[i], width=2),
            )
        )
    fig.add_trace(
        go.Scatter(
            x=ledger["t"],
            y=ledger["dissipation_increment"].cumsum(),
            mode="lines",
            name="cumulative dissipation",
            line=dict(color=_colour(3), width=1),
            yaxis="y2",
        )
    )
    fig.update_layout(
        title="Energy ledger",
        xaxis_title="t",
        yaxis_title="energy",
        yaxis2=dict(title="dissipated", overlaying="y", side="right"),
        hovermode="x unified",
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        template="plotly_white",
    )
    return fig


# ---------------------------------------------------------------------------
# Interface snapshots
# ---------------------------------------------------------------------------

def plot_interface(interface: pd.DataFrame, lx: float | None = None, ly: float | None = None, max_curves: int = 12) -> go.Figure:
    """Extracted interfaces at up to *max_curves* evenly spaced snapshot times."""
    fig = go.Figure()
    times = np.sort(interface["t"].unique())
    if times.size > max_curves:
        times = times[np.linspace(0, times.size - 1, max_curves).round().astype(int)]
    colours = px.colors.sample_colorscale(SNAPSHOT_SCALE, np.linspace(0, 1, max(len(times), 2)).tolist())
    for k, t in enumerate(times):
        snapshot = interface[interface["t"] == t]
        for j, (_, component) in enumerate(snapshot.groupby("component")):
            component = component.sort_values("vertex_index")
            fig.add_trace(
                go.Scatter(
                    x=component["x"],
                    y=component["y"],
                    mode="lines",
                    name=f"t={t:.4g}",
                    legendgroup=f"{t}",
                    showlegend=j == 0,
                    line=dict(color=colours[k], width=2),
                )
            )
    layout = dict(
        title="Interface snapshots",
        xaxis_title="x",
        yaxis_title="y",
        yaxis=dict(scaleanchor="x", scaleratio=1),
        template="plotly_white",
    )
    if lx is not None and ly is not None:
        fig.add_shape(type="rect", x0=0, y0=0, x1=lx, y1=ly, line=dict(color="grey", width=1))
    fig.update_layout(**layout)
    return fig


def plot_normal_velocity(interface: pd.DataFrame, t: float) -> go.Figure:
    snapshot = interface[np.isclose(interface["t"], t)]
    fig = px.scatter(snapshot, x="x", y="y", color="V", color_continuous_scale="RdBu")
    fig.update_layout(title=f"Normal velocity at t={t:.4g}", template="plotly_white")
    return fig


# ---------------------------------------------------------------------------
# Stability series
# ---------------------------------------------------------------------------

def plot_stability(stability: pd.DataFrame) -> go.Figure:
    """Relative entropy and bulk error against their Gronwall bounds."""
    fig = go.Figure()
    pairs = [
        ("rel_entropy", "gronwall_rhs_relEn"),
        ("bulk_error", "gronwall_rhs_bulk"),
    ]
    for i, (series, bound) in enumerate(pairs):
        if series not in stability:
            continue
        fig.add_trace(go.Scatter(
            x=stability["t"], y=stability[series], mode="lines+markers", name=series,
            line=dict(color=_colour(i), width=2), marker=dict(size=4),
        ))
        if bound in stability:
            fig.add_trace(go.Scatter(
                x=stability["t"], y=stability[bound], mode="lines", name=f"{series} bound",
                line=dict(color=_colour(i), dash="dash", width=1),
            ))
    fig.update_layout(
        title="Stability functionals",
        xaxis_title="t",
        yaxis_title="value",
        hovermode="x unified",
        template="plotly_white",
    )
    return fig


def plot_energies(stability: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for i, column in enumerate(("E_eps", "E_sharp")):
        fig.add_trace(go.Scatter(x=stability["t"], y=stability[column], mode="lines", name=column,
                                 line=dict(color=_colour(i), width=2)))
    fig.update_layout(title="Phase-field and sharp energy", xaxis_title="t", template="plotly_white")
    return fig


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def plot_convergence(table: pd.DataFrame, columns: list[str] | None = None) -> go.Figure:
    """Log-log error against eps, one trace per error column."""
    columns = columns or [c for c in table.columns if c not in ("eps", "h", "partial", "checks_passed")
                          and not c.endswith("_order")]
    fig = go.Figure()
    for i, column in enumerate(columns):
        values = table[column].abs()
        if not np.isfinite(values).any():
            continue
        fig.add_trace(go.Scatter(
            x=table["eps"], y=values, mode="lines+markers", name=column,
            line=dict(color=_colour(i), width=2),
        ))
    fig.update_layout(
        title="Convergence in eps",
        xaxis=dict(title="eps", type="log", autorange="reversed"),
        yaxis=dict(title="error", type="log"),
        template="plotly_white",
    )
    return fig


def report_figures(frames: dict[str, pd.DataFrame]) -> list[go.Figure]:
    """The figures of an HTML report, for whichever outputs are present."""
    figures = []
    if "energy_ledger" in frames:
        figures.append(plot_energy_ledger(frames["energy_ledger"]))
    if "interface" in frames and len(frames["interface"]):
        figures.append(plot_interface(frames["interface"]))
    if "stability" in frames:
        figures.append(plot_energies(frames["stability"]))
        figures.append(plot_stability(frames["stability"]))
    if "convergence" in frames and len(frames["convergence"]) > 1:
        figures.append(plot_convergence(frames["convergence"]))
    return figures
