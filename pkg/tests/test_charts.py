from __future__ import annotations

import numpy as np
import pandas as pd

import charts


def _frames() -> dict[str, pd.DataFrame]:
    t = np.linspace(0.0, 0.01, 5)
    ledger = pd.DataFrame({
        "step": range(5), "t": t, "E_eps": 2.0 - t, "bulk_E": 1.5 - t, "boundary_E": np.full(5, 0.5),
        "dissipation_increment": np.r_[0.0, np.full(4, 0.0025)], "numerical_dissipation": np.zeros(5),
    })
    interface = pd.DataFrame({
        "t": np.repeat(t[:2], 3), "component": 0, "vertex_index": np.tile(range(3), 2),
        "x": 0.5, "y": np.tile([0.0, 0.5, 1.0], 2), "nu_x": 1.0, "nu_y": 0.0, "V": np.nan,
    })
    stability = pd.DataFrame({
        "t": t, "E_eps": 2.0 - t, "E_sharp": np.full(5, 2.0), "rel_entropy": t**2, "bulk_error": t**2,
        "gronwall_rhs_relEn": np.full(5, 1.0),
    })
    convergence = pd.DataFrame({"eps": [0.04, 0.02], "h": [0.01, 0.005], "energy_gap": [0.1, 0.03],
                                "energy_gap_order": [np.nan, 1.7], "partial": False})
    return {"energy_ledger": ledger, "interface": interface, "stability": stability, "convergence": convergence}


def test_report_figures_cover_every_output():
    figures = charts.report_figures(_frames())
    assert [f.layout.title.text for f in figures] == [
        "Energy ledger", "Interface snapshots", "Phase-field and sharp energy",
        "Stability functionals", "Convergence in eps",
    ]


def test_convergence_plot_skips_order_columns():
    fig = charts.plot_convergence(_frames()["convergence"])
    assert [trace.name for trace in fig.data] == ["energy_gap"]


def test_stability_plot_draws_bounds_when_present():
    fig = charts.plot_stability(_frames()["stability"])
    assert [trace.name for trace in fig.data] == ["rel_entropy", "rel_entropy bound", "bulk_error"]


def test_interface_plot_thins_snapshots():
    frame = _frames()["interface"]
    many = pd.concat([frame.assign(t=frame["t"] + k) for k in range(10)], ignore_index=True)
    fig = charts.plot_interface(many, lx=1.0, ly=1.0, max_curves=4)
    assert len(fig.data) == 4
