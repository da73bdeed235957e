"""Pure pandas functions for post-processing run outputs.

Every function here takes frames or arrays and returns a new frame or a plain
dict, no I/O.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

from models import CONVERGENCE_COLUMNS

ERROR_COLUMNS = [c for c in CONVERGENCE_COLUMNS if c not in ("eps", "h")]


# ---------------------------------------------------------------------------
# Energy ledger
# ---------------------------------------------------------------------------

def summarize_ledger(ledger: pd.DataFrame) -> dict:
    """Energy drop, worst increase and closure of the dissipation ledger."""
    E = ledger["E_eps"].to_numpy(dtype=float)
    increments = np.diff(E)
    dissipated = float(ledger["dissipation_increment"].iloc[1:].sum())
    numerical = float(ledger["numerical_dissipation"].iloc[1:].sum())
    drop = float(E[0] - E[-1]) if E.size else 0.0
    closure = abs(drop - dissipated - numerical) / max(abs(E[0]), 1e-300) if E.size else 0.0
    return {
        "steps": int(ledger["step"].iloc[-1]) if len(ledger) else 0,
        "t_final": float(ledger["t"].iloc[-1]) if len(ledger) else 0.0,
        "E_initial": float(E[0]) if E.size else math.nan,
        "E_final": float(E[-1]) if E.size else math.nan,
        "max_energy_increase": float(max(0.0, increments.max())) if increments.size else 0.0,
        "physical_dissipation": dissipated,
        "numerical_dissipation": numerical,
        "min_numerical_dissipation": float(ledger["numerical_dissipation"].iloc[1:].min())
        if len(ledger) > 1 else 0.0,
        "ledger_closure": closure,
        "physical_share": dissipated / drop if drop > 0 else math.nan,
    }


def energy_monotone(ledger: pd.DataFrame, rtol: float = 1e-8) -> bool:
    E = ledger["E_eps"].to_numpy(dtype=float)
    return bool(np.all(np.diff(E) <= rtol * (1.0 + np.abs(E[:-1]))))


# ---------------------------------------------------------------------------
# Reference laws
# ---------------------------------------------------------------------------

def fit_radius_law(times, radii, r0: float, t_end: float | None = None, start: float = 0.25) -> dict:
    """Compare measured radii with R(t)^2 = r0^2 - 2t on [start * T, T].

    Returns the worst relative error of R^2 and the fitted slope of R^2 in t
    (which the law puts at -2).
    """
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float), "R": np.asarray(radii, dtype=float)})
    frame = frame.dropna()
    T = float(frame["t"].max()) if t_end is None else t_end
    window = frame[frame["t"] >= start * T]
    if window.empty:
        return {"max_rel_error": math.nan, "slope": math.nan, "samples": 0}
    exact = r0**2 - 2.0 * window["t"]
    rel = ((window["R"] ** 2 - exact) / exact).abs()
    slope = float(np.polyfit(window["t"], window["R"] ** 2, 1)[0]) if len(window) > 1 else math.nan
    return {"max_rel_error": float(rel.max()), "slope": slope, "samples": int(len(window))}


def fit_translation_speed(times, heights, start: float = 0.5) -> dict:
    """Least-squares speed of the mean interface height over the later part of the run."""
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float), "H": np.asarray(heights, dtype=float)})
    frame = frame.dropna()
    if len(frame) < 2:
        return {"speed": math.nan, "samples": int(len(frame))}
    t0 = frame["t"].min() + start * (frame["t"].max() - frame["t"].min())
    window = frame[frame["t"] >= t0]
    if len(window) < 2:
        window = frame
    slope = float(np.polyfit(window["t"], window["H"], 1)[0])
    return {"speed": slope, "samples": int(len(window))}


def instantaneous_speed(times, heights) -> np.ndarray:
    """Centred differences of *heights*; one-sided at the ends."""
    t = np.asarray(times, dtype=float)
    H = np.asarray(heights, dtype=float)
    if t.size < 2:
        return np.full(t.size, math.nan)
    return np.gradient(H, t)


# ---------------------------------------------------------------------------
# Convergence tables
# ---------------------------------------------------------------------------

def convergence_orders(table: pd.DataFrame, columns: list[str] | None = None) -> pd.DataFrame:
    """Add ``<col>_order`` = log(e_k / e_{k+1}) / log(eps_k / eps_{k+1}) per consecutive rows.

    The first row carries NaN; a single-row table gets no order columns.
    """
    table = table.sort_values("eps", ascending=False).reset_index(drop=True)
    if len(table) < 2:
        return table
    columns = columns or [c for c in ERROR_COLUMNS if c in table.columns]
    log_eps = np.log(table["eps"].to_numpy(dtype=float))
    for col in columns:
        values = table[col].to_numpy(dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            orders = np.diff(np.log(np.abs(values))) / np.diff(log_eps)
        table[f"{col}_order"] = np.concatenate([[math.nan], orders])
    return table


def strictly_decreasing(table: pd.DataFrame, column: str) -> bool:
    values = table.sort_values("eps", ascending=False)[column].to_numpy(dtype=float)
    return bool(np.all(np.diff(values) < 0))


def decreasing_errors(table: pd.DataFrame) -> dict[str, bool]:
    """Which error columns shrink strictly as eps is refined (needs two rows)."""
    if len(table) < 2:
        return {}
    return {col: strictly_decreasing(table, col) for col in ERROR_COLUMNS if col in table.columns}


def gronwall_integrals(stability: pd.DataFrame) -> pd.DataFrame:
    """Running integrals of the relative entropy and bulk error series."""
    frame = stability[["t", "rel_entropy", "bulk_error"]].copy()
    dt = frame["t"].diff().fillna(0.0)
    mean_rel = frame["rel_entropy"].rolling(2, min_periods=1).mean()
    mean_sum = (frame["rel_entropy"] + frame["bulk_error"]).rolling(2, min_periods=1).mean()
    frame["int_rel_entropy"] = (dt * mean_rel).cumsum()
    frame["int_total"] = (dt * mean_sum).cumsum()
    return frame
