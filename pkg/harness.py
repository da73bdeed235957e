"""Experiment driver: builds runs from an ExperimentConfig and writes their reports.

Each ``cmd_*`` function does the work of one CLI subcommand and returns a
plain dict summary; ``cli.py`` only parses arguments and maps exceptions to
exit codes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
import sympy

import analysis
import charts
from cache import RunCache
from calibrations import (
    CalibrationFields,
    GronwallReport,
    ReferenceFlow,
    ShrinkingHalfDisk,
    StationaryChord,
    StripTranslator,
    build_calibration,
    build_reference,
    bulk_error,
    gronwall_check,
    relative_entropy_sharp,
    verify_calibration,
)
from config import ConfigError, ExperimentConfig, Settings
from diagnostics import TestFieldPair, diagnostics_row
from domain_grid import build_grid, make_walls
from models import (
    CONVERGENCE_COLUMNS,
    DIAGNOSTICS_COLUMNS,
    INTERFACE_COLUMNS,
    LEDGER_COLUMNS,
    MAX_ABS_TOL,
    STABILITY_COLUMNS,
    Grid,
    InterfaceCurve,
    StabilityReport,
    Trajectory,
    VelocitySample,
    Walls,
)
from potentials import C0, EnergyModel, NonWettingError, eval_psi, lipschitz_envelope, young_angle
from reports import read_csv, read_json, write_csv, write_json, write_text
from sharp_interface import (
    ContactBandError,
    CorrespondenceError,
    DissipationReport,
    build_catalogue,
    bv_dissipation_check,
    contact_angle,
    energy_gap,
    extract_interface,
    interface_frame_rows,
    motion_law_residual,
    normal_velocity,
    sharp_energy,
)
from solver import discrete_energy, run, well_prepared

logger = logging.getLogger(__name__)

STABILITY_FACTOR = 10.0
LEDGER_CLOSURE_TOL = 0.01
PERTURBATION_WIDTH = 0.1  # of min(lx, ly)
BRUTE_FORCE_LIMIT = 5000
# relaxed jumps are bounded by c0
NON_WETTING_TOL = 1e-12


class AcceptanceError(RuntimeError):
    """Raised in --check mode when a run violates one of its acceptance checks."""

    def __init__(self, failed: list[str]):
        super().__init__("failed checks: " + ", ".join(failed))
        self.failed = failed


# ---------------------------------------------------------------------------
# Building a run
# ---------------------------------------------------------------------------

def build_model(config: ExperimentConfig) -> EnergyModel:
    return EnergyModel.from_angle(config.alpha)


def build_walls(config: ExperimentConfig, model: EnergyModel | None = None) -> Walls:
    contact = config.contact_walls
    return make_walls(model or build_model(config) if contact else None, contact=contact)


def build_reference_flow(config: ExperimentConfig) -> ReferenceFlow | None:
    kind = config.reference_kind()
    if kind is None:
        return None
    params = {
        "x0": config.x0,
        "r0": config.radius,
        "xc": config.center_x,
        "alpha": config.alpha,
        "y0": config.y0,
    }
    return build_reference(kind, config.lx, config.ly, **{k: v for k, v in params.items() if v is not None})


def _expression_field(expression: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    x, y = sympy.symbols("x y", real=True)
    try:
        expr = sympy.sympify(expression, locals={"x": x, "y": y})
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"cannot parse level-set expression {expression!r}: {exc}") from exc
    unknown = expr.free_symbols - {x, y}
    if unknown:
        raise ConfigError(f"level-set expression uses unknown symbols {sorted(map(str, unknown))}")
    return sympy.lambdify((x, y), expr, modules="numpy")


def initial_signed_distance(
    config: ExperimentConfig,
    grid: Grid,
    flow: ReferenceFlow | None = None,
) -> np.ndarray:
    """Signed distance (negative inside A) of the initial geometry on *grid*.

    The optional perturbation moves the interface outward by up to
    ``perturbation * h`` with a Gaussian bump centred on its midpoint.
    """
    X, Y = grid.mesh()
    lx, ly = config.lx, config.ly
    if config.geometry == "chord":
        x0 = config.x0 if config.x0 is not None else 0.5 * lx
        sd = x0 - X
        anchor = np.array([x0, 0.5 * ly])
    elif config.geometry == "half_disk":
        xc = config.center_x if config.center_x is not None else 0.5 * lx
        sd = np.hypot(X - xc, Y) - config.radius
        anchor = np.array([xc, config.radius])
    elif config.geometry == "translator":
        translator = flow if isinstance(flow, StripTranslator) else build_reference(
            "strip_translator", lx, ly, alpha=config.alpha,
            **({"y0": config.y0} if config.y0 is not None else {}),
        )
        sd = translator.signed_distance(X, Y, 0.0)
        anchor = np.array([0.5 * lx, float(translator.graph(0.5 * lx, 0.0))])
    else:
        func = _expression_field(config.expression)
        sd = np.broadcast_to(np.asarray(func(X, Y), dtype=float), grid.shape).copy()
        k = np.unravel_index(np.argmin(np.abs(sd)), grid.shape)
        anchor = np.array([X[k], Y[k]])

    if config.perturbation:
        width = PERTURBATION_WIDTH * min(lx, ly)
        r2 = (X - anchor[0]) ** 2 + (Y - anchor[1]) ** 2
        sd = sd - config.perturbation * grid.h * np.exp(-r2 / width**2)
    return sd


# ---------------------------------------------------------------------------
# Analysis of a trajectory
# ---------------------------------------------------------------------------

@dataclass
class RunAnalysis:
    """Everything derived from one trajectory; the frames are the CSV contents."""

    config: ExperimentConfig
    trajectory: Trajectory
    model: EnergyModel
    flow: ReferenceFlow | None
    curves: list[InterfaceCurve]
    velocities: list[list[VelocitySample] | None]
    stability: StabilityReport
    diagnostics: pd.DataFrame
    interface: pd.DataFrame
    geometry: dict
    calibration: CalibrationFields | None = None
    gronwall: GronwallReport | None = None
    dissipation: DissipationReport | None = None
    motion_law: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def eps(self) -> float:
        return self.trajectory.eps

    @property
    def h(self) -> float:
        return self.trajectory.grid.h


def default_pair(config: ExperimentConfig, model: EnergyModel) -> TestFieldPair:
    """Linear ramp xi meeting xi . n = cos(alpha) on contact walls and 0 on Neumann walls."""
    cos_a = model.cos_alpha
    c = {w: (cos_a if w in config.contact_walls else 0.0) for w in ("left", "right", "bottom", "top")}
    lx, ly = config.lx, config.ly

    def xi(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            c["left"] * (1.0 - x / lx) - c["right"] * (x / lx),
            c["bottom"] * (1.0 - y / ly) - c["top"] * (y / ly),
        )

    return TestFieldPair(eta=lambda x, y: np.ones(np.shape(x)), xi=xi, name="wall-ramp")


def _measured_angle(curve: InterfaceCurve, config: ExperimentConfig) -> float:
    lo, hi = config.contact_band
    band = (lo * curve.eps, hi * curve.eps)
    angles: list[float] = []
    for wall in sorted({cp.wall for cp in curve.contact_points}):
        try:
            angles.extend(contact_angle(curve, wall, band=band))
        except ContactBandError as exc:
            logger.debug("no contact angle at t=%.4g: %s", curve.t, exc)
    return float(np.mean(angles)) if angles else math.nan


def _target_angle(config: ExperimentConfig, curve: InterfaceCurve) -> float:
    walls = {cp.wall for cp in curve.contact_points}
    if walls and walls <= set(config.contact_walls):
        return config.alpha
    return 0.5 * math.pi


def _finite(frame: pd.DataFrame) -> pd.DataFrame:
    """Drop all-NaN columns and fill the remaining gaps from the neighbouring snapshot."""
    frame = frame.dropna(axis=1, how="all")
    return frame.ffill().bfill()


def analyze(
    trajectory: Trajectory,
    config: ExperimentConfig,
    model: EnergyModel,
    flow: ReferenceFlow | None = None,
) -> RunAnalysis:
    snaps = trajectory.snapshots
    walls = trajectory.walls
    times = trajectory.times
    curves = [extract_interface(s) for s in snaps]

    velocities: list[list[VelocitySample] | None] = []
    for a, b in zip(curves[:-1], curves[1:]):
        try:
            velocities.append(normal_velocity(a, b))
        except (CorrespondenceError, ValueError) as exc:
            logger.warning("no normal velocity on [%.4g, %.4g]: %s", a.t, b.t, exc)
            velocities.append(None)

    E_eps = np.array([discrete_energy(s, walls) for s in snaps])
    E_sharp = np.array([sharp_energy(c, model, walls) for c in curves])
    angles = np.array([_measured_angle(c, config) for c in curves])

    catalogue = build_catalogue(config.lx, config.ly)
    law_rows = []
    for curve, samples in zip(curves[:-1], velocities):
        row = {"t": curve.t}
        for field_ in catalogue:
            row[field_.name] = (
                motion_law_residual(curve, samples, field_, model, walls) if samples else math.nan
            )
        law_rows.append(row)
    motion_law = pd.DataFrame(law_rows, columns=["t"] + [f.name for f in catalogue])
    law_max = motion_law.drop(columns="t").max(axis=1).to_numpy() if len(motion_law) else np.zeros(0)
    law_series = np.append(law_max, law_max[-1] if law_max.size else math.nan)

    frame = pd.DataFrame({"t": times, "E_eps": E_eps, "E_sharp": E_sharp, "contact_angle": angles})
    frame["motion_law_residual"] = law_series

    calibration = None
    gronwall = None
    if flow is not None:
        calibration = build_calibration(flow, trajectory.grid, float(times[-1]), eps=trajectory.eps)
        at_t = [calibration.at_time(float(t)) for t in times]
        frame["rel_entropy"] = [relative_entropy_sharp(c, f) for c, f in zip(curves, at_t)]
        frame["bulk_error"] = [bulk_error(c, f) for c, f in zip(curves, at_t)]
        if len(times) > 1:
            C = STABILITY_FACTOR * max(calibration.C.values(), default=0.0)
            gronwall = gronwall_check(times, frame["rel_entropy"], frame["bulk_error"], C=C)
            frame["gronwall_rhs_relEn"] = gronwall.rhs_relEn
            frame["gronwall_rhs_bulk"] = gronwall.rhs_bulk
        pairs = [f.test_pair() for f in at_t]
    else:
        pairs = [default_pair(config, model)] * len(snaps)

    if isinstance(flow, ShrinkingHalfDisk):
        frame["measured_radius"] = np.sqrt(2.0 * np.array([c.area for c in curves]) / math.pi)
    heights = np.array([config.ly - c.area / config.lx for c in curves])
    if isinstance(flow, StripTranslator):
        frame["measured_speed"] = analysis.instantaneous_speed(times, heights)

    diagnostics = pd.DataFrame(
        [diagnostics_row(s, p, walls) for s, p in zip(snaps, pairs)],
        columns=DIAGNOSTICS_COLUMNS,
    )

    rows: list[dict] = []
    for k, curve in enumerate(curves):
        samples = velocities[k] if k < len(velocities) else None
        rows.extend(interface_frame_rows(curve, samples))
    interface = pd.DataFrame(rows, columns=INTERFACE_COLUMNS)

    dissipation = None
    if len(curves) > 1:
        try:
            dissipation = bv_dissipation_check(curves, model, walls, initial_energy=float(E_eps[0]))
        except CorrespondenceError as exc:
            logger.warning("dissipation check skipped: %s", exc)

    stability = StabilityReport(_finite(frame[[c for c in STABILITY_COLUMNS if c in frame.columns]]))

    geometry = {
        "t": times,
        "interior_length": [c.interior_length for c in curves],
        "wetted": {w: [c.wetted.get(w, 0.0) for c in curves] for w in ("left", "right", "bottom", "top")},
        "area": [c.area for c in curves],
        "components": [len(c.components) for c in curves],
        "closed_components": [sum(p.closed for p in c.components) for c in curves],
        "contact_points": [len(c.contact_points) for c in curves],
        "contact_angle": angles,
        "energy_gap": [energy_gap(c, float(E), model, walls) for c, E in zip(curves, E_eps)],
        "mean_height": heights,
        "measured_radius": frame["measured_radius"].to_numpy() if "measured_radius" in frame else None,
        "measured_speed": frame["measured_speed"].to_numpy() if "measured_speed" in frame else None,
        "motion_law_final": motion_law.iloc[-1].drop("t").to_dict() if len(motion_law) else {},
        "volume_continuity": None if dissipation is None else {
            "holder_ratio": dissipation.holder_ratio,
            "holder_ok": dissipation.holder_ok,
            "max_dissipation_slack": dissipation.max_slack,
        },
        "reference": flow.describe() if flow is not None else None,
    }

    return RunAnalysis(
        config=config,
        trajectory=trajectory,
        model=model,
        flow=flow,
        curves=curves,
        velocities=velocities,
        stability=stability,
        diagnostics=diagnostics,
        interface=interface,
        geometry=geometry,
        calibration=calibration,
        gronwall=gronwall,
        dissipation=dissipation,
        motion_law=motion_law,
    )


def acceptance_checks(result: RunAnalysis) -> dict[str, bool]:
    traj = result.trajectory
    ledger = analysis.summarize_ledger(traj.ledger)
    checks = {
        "energy_monotone": analysis.energy_monotone(traj.ledger),
        "ledger_closure": ledger["ledger_closure"] <= LEDGER_CLOSURE_TOL,
        "finite_series": True,
    }
    if traj.config.scheme == "convex_splitting":
        checks["maximum_principle"] = traj.max_abs <= 1.0 + MAX_ABS_TOL
    if result.dissipation is not None:
        checks["volume_continuity"] = result.dissipation.holder_ok
    if result.gronwall is not None:
        checks["gronwall"] = bool(result.gronwall.passed)
    try:
        result.stability.validate()
    except ValueError as exc:
        logger.warning("stability series invalid: %s", exc)
        checks["finite_series"] = False
    return checks


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def simulate(
    config: ExperimentConfig,
    eps: float | None = None,
    cache: RunCache | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> RunAnalysis:
    """Run the solver for one eps of *config* and analyse the trajectory."""
    eps = config.eps if eps is None else eps
    grid = build_grid(config.lx, config.ly, config.spacing(eps))
    model = build_model(config)
    walls = build_walls(config, model)
    flow = build_reference_flow(config)
    if flow is not None:
        flow.validate(eps, config.t_end)
    u0 = well_prepared(grid, eps, initial_signed_distance(config, grid, flow))
    cfg = config.solver_config(eps)
    logger.info(
        "simulate %s: eps=%g h=%g tau=%g scheme=%s T=%g",
        config.name, eps, grid.h, cfg.tau, cfg.scheme, cfg.t_end,
    )
    if cache is not None:
        trajectory = cache.get_or_run(config.digest(eps), u0, cfg, walls, progress=progress)
    else:
        trajectory = run(u0, cfg, walls, progress=progress)
    return analyze(trajectory, config, model, flow)


def write_run(result: RunAnalysis, out_dir: Path, checks: dict[str, bool] | None = None) -> dict:
    out_dir = Path(out_dir)
    traj = result.trajectory
    write_csv(out_dir / "energy_ledger.csv", traj.ledger, LEDGER_COLUMNS)
    write_csv(out_dir / "interface.csv", result.interface, INTERFACE_COLUMNS)
    write_csv(out_dir / "stability.csv", result.stability.frame, STABILITY_COLUMNS)
    write_csv(out_dir / "diagnostics.csv", result.diagnostics, DIAGNOSTICS_COLUMNS)
    write_csv(out_dir / "motion_law.csv", result.motion_law)
    write_json(out_dir / "geometry.json", result.geometry)

    summary = run_summary(result, checks)
    write_json(out_dir / "summary.json", summary)
    return summary


def run_summary(result: RunAnalysis, checks: dict[str, bool] | None = None) -> dict:
    config = result.config
    traj = result.trajectory
    summary = {
        "name": config.name,
        "digest": config.digest(result.eps),
        "eps": result.eps,
        "h": result.h,
        "tau": traj.config.tau,
        "scheme": traj.config.scheme,
        "alpha": config.alpha,
        "contact_walls": list(config.contact_walls),
        "snapshots": len(traj.snapshots),
        "max_abs_u": traj.max_abs,
        "ledger": analysis.summarize_ledger(traj.ledger),
        "final": {k: v for k, v in result.stability.frame.iloc[-1].items()},
        "diagnostics_final": result.diagnostics.iloc[-1].to_dict(),
    }
    if result.calibration is not None:
        summary["calibration"] = {"ell": result.calibration.ell, "C": result.calibration.C}
    if result.gronwall is not None:
        summary["gronwall"] = {
            "C": result.gronwall.C,
            "smallest_C_relEn": result.gronwall.smallest_C_relEn,
            "smallest_C_bulk": result.gronwall.smallest_C_bulk,
            "passed": result.gronwall.passed,
            "envelope_ok": result.gronwall.envelope_ok,
        }
    frame = result.stability.frame
    if isinstance(result.flow, ShrinkingHalfDisk) and "measured_radius" in frame:
        summary["radius_law"] = analysis.fit_radius_law(frame["t"], frame["measured_radius"], result.flow.r0)
    if isinstance(result.flow, StripTranslator):
        fit = analysis.fit_translation_speed(frame["t"], result.geometry["mean_height"])
        summary["translation"] = {**fit, "expected": result.flow.speed}
    if checks is not None:
        summary["checks"] = checks
    return summary


def cmd_simulate(
    config: ExperimentConfig,
    out_dir: Path,
    settings: Settings | None = None,
    check: bool = False,
    use_cache: bool = True,
) -> dict:
    settings = settings or Settings.from_env()
    cache = RunCache(settings.cache_dir) if use_cache else None
    result = simulate(config, cache=cache)
    checks = acceptance_checks(result) if check else None
    summary = write_run(result, out_dir, checks)
    logger.info("wrote run outputs to %s", out_dir)
    if checks is not None:
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise AcceptanceError(failed)
    return summary


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def convergence_row(result: RunAnalysis) -> dict:
    """Errors of one sweep member against its reference law."""
    frame = result.stability.frame
    curve = result.curves[-1]
    angle = frame["contact_angle"].iloc[-1] if "contact_angle" in frame else math.nan
    angle_error = abs(angle - _target_angle(result.config, curve)) if np.isfinite(angle) else math.nan

    flow = result.flow
    if isinstance(flow, ShrinkingHalfDisk):
        shape_error = analysis.fit_radius_law(frame["t"], frame["measured_radius"], flow.r0)["max_rel_error"]
    elif isinstance(flow, StripTranslator):
        speed = analysis.fit_translation_speed(frame["t"], result.geometry["mean_height"])["speed"]
        shape_error = abs(speed - flow.speed) / max(abs(flow.speed), 1e-300)
    elif isinstance(flow, StationaryChord) and curve.components:
        vertices = np.concatenate([p.vertices for p in curve.components])
        shape_error = float(np.max(np.abs(vertices[:, 0] - flow.x0)))
    else:
        shape_error = math.nan

    E = frame["E_eps"].to_numpy()
    diag = result.diagnostics
    return {
        "eps": result.eps,
        "h": result.h,
        "contact_angle_error": angle_error,
        "radius_or_speed_error": shape_error,
        "energy_gap": abs(result.geometry["energy_gap"][-1]),
        "motion_law_residual": float(result.motion_law.drop(columns="t").max(axis=1).mean())
        if len(result.motion_law) else math.nan,
        "equipartition": float(np.max(diag["equipartition"].to_numpy() / E)),
        "boundary_defect": float(np.max(np.abs(diag["boundary_defect"].to_numpy()) / E)),
        "rel_entropy": float(frame["rel_entropy"].max()) if "rel_entropy" in frame else math.nan,
        "bulk_error": float(frame["bulk_error"].max()) if "bulk_error" in frame else math.nan,
    }


def _member_dir(out_dir: Path, eps: float) -> Path:
    return Path(out_dir) / f"eps_{eps:g}"


def _sweep_member(config: ExperimentConfig, eps: float, out_dir: Path, cache_dir: Path | None, check: bool) -> dict:
    member = config.with_eps(eps)
    result = simulate(member, cache=RunCache(cache_dir) if cache_dir is not None else None)
    checks = acceptance_checks(result) if check else None
    write_run(result, _member_dir(out_dir, eps), checks)
    row = convergence_row(result)
    if checks is not None:
        row["checks_passed"] = all(checks.values())
    return row


def cmd_sweep(
    config: ExperimentConfig,
    out_dir: Path,
    settings: Settings | None = None,
    threads: int | None = None,
    check: bool = False,
    use_cache: bool = True,
) -> pd.DataFrame:
    """One run per eps of the list; writes convergence.csv with empirical orders.

    Members run in separate processes. A failing member stops the sweep; the
    rows finished before it are written with ``partial = True`` and the error
    is re-raised.
    """
    settings = settings or Settings.from_env()
    threads = threads or settings.threads
    out_dir = Path(out_dir)
    cache_dir = settings.cache_dir if use_cache else None
    eps_list = list(config.eps_list)

    rows: list[dict] = []
    failure: BaseException | None = None
    if threads > 1 and len(eps_list) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(eps_list))) as pool:
            futures = [pool.submit(_sweep_member, config, e, out_dir, cache_dir, check) for e in eps_list]
            for future in futures:
                if failure is not None:
                    future.cancel()
                    continue
                try:
                    rows.append(future.result())
                except Exception as exc:
                    failure = exc
    else:
        for eps in eps_list:
            try:
                rows.append(_sweep_member(config, eps, out_dir, cache_dir, check))
            except Exception as exc:
                failure = exc
                break

    table = pd.DataFrame(rows, columns=CONVERGENCE_COLUMNS + (["checks_passed"] if check else []))
    table = analysis.convergence_orders(table)
    table["partial"] = failure is not None
    write_csv(out_dir / "convergence.csv", table)
    write_json(out_dir / "summary.json", {
        "name": config.name,
        "eps_list": eps_list,
        "completed": len(rows),
        "partial": failure is not None,
        "decreasing": analysis.decreasing_errors(table),
        "rows": table.to_dict(orient="records"),
    })
    if failure is not None:
        logger.error("sweep stopped after %d of %d members", len(rows), len(eps_list))
        raise failure
    if check and "checks_passed" in table and not table["checks_passed"].all():
        failed = [f"eps={e:g}" for e, ok in zip(table["eps"], table["checks_passed"]) if not ok]
        raise AcceptanceError(failed)
    return table


# ---------------------------------------------------------------------------
# verify-calibration
# ---------------------------------------------------------------------------

def cmd_verify_calibration(
    config: ExperimentConfig,
    out_dir: Path,
    seed: int = 0,
    corrupt: bool = False,
) -> dict:
    """Check the calibration conditions of the selected reference flow; writes calibration.json."""
    flow = build_reference_flow(config)
    if flow is None:
        raise ConfigError("verify-calibration needs a reference flow")
    grid = build_grid(config.lx, config.ly, config.spacing())
    fields = build_calibration(flow, grid, config.t_end, eps=config.eps)
    if corrupt:
        fields = fields.corrupted(rng=np.random.default_rng(seed))
    results = verify_calibration(fields)
    report = {
        "flow": flow.describe(),
        "grid": {"nx": grid.nx, "ny": grid.ny, "h": grid.h},
        "horizon": config.t_end,
        "ell": fields.ell,
        "c": fields.c,
        "C": fields.C,
        "corrupted": corrupt,
        "xi_scale": fields.xi_scale,
        "seed": seed if corrupt else None,
        "conditions": [r.as_dict() for r in results],
        "failed": [r.name for r in results if not r.passed],
        "passed": all(r.passed for r in results),
    }
    write_json(Path(out_dir) / "calibration.json", report)
    logger.info("calibration %s: %s", flow.kind, "PASS" if report["passed"] else "FAIL")
    return report


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

def cmd_envelope(table_path: Path, out_dir: Path, method: str = "two_pass") -> dict:
    """Relax a tabulated sigma(s) to its 1-Lipschitz envelope in the psi variable.

    Writes sigma_hat.csv and envelope.json. A jump of magnitude c0 or more is
    non-wetting: the files are still written, then NonWettingError is raised.
    """
    path = Path(table_path)
    if not path.exists():
        raise ConfigError(f"sigma table {path} not found")
    table = read_csv(path)
    missing = {"s", "sigma"} - set(table.columns)
    if missing:
        raise ConfigError(f"sigma table needs columns s and sigma, missing {sorted(missing)}")
    s = table["s"].to_numpy(dtype=float)
    sigma = table["sigma"].to_numpy(dtype=float)
    if s.size == 0:
        raise ConfigError("sigma table is empty")
    if np.any(np.diff(s) <= 0):
        raise ConfigError("s grid must be strictly increasing")
    if s[0] < -1.0 - 1e-12 or s[-1] > 1.0 + 1e-12:
        raise ConfigError("s grid must lie in [-1, 1]")
    if s[0] > -1.0 + 1e-12 or s[-1] < 1.0 - 1e-12:
        logger.warning("s grid does not span [-1, 1]; the jump is taken between its endpoints")

    positions = eval_psi(s)
    sigma_hat = lipschitz_envelope(sigma, positions, method=method)
    cross_check = None
    if method == "two_pass" and s.size <= BRUTE_FORCE_LIMIT:
        brute = lipschitz_envelope(sigma, positions, method="brute_force")
        cross_check = float(np.max(np.abs(brute - sigma_hat)))

    jump = float(sigma_hat[-1] - sigma_hat[0])
    non_wetting = abs(jump) >= C0 - NON_WETTING_TOL
    angle = None
    if not non_wetting:
        angle = young_angle(jump) if jump >= 0 else math.pi - young_angle(-jump)

    out_dir = Path(out_dir)
    write_csv(out_dir / "sigma_hat.csv", pd.DataFrame({"s": s, "sigma_hat": sigma_hat}))
    summary = {
        "c0": C0,
        "jump": jump,
        "young_angle_rad": angle,
        "non_wetting": non_wetting,
        "relaxed": bool(np.any(sigma_hat < sigma - 1e-12)),
        "max_relaxation": float(np.max(sigma - sigma_hat)),
        "method": method,
        "brute_force_difference": cross_check,
    }
    write_json(out_dir / "envelope.json", summary)
    if non_wetting:
        raise NonWettingError(f"relaxed jump {jump:.6g} reaches c0={C0:.6g}: non-wetting")
    return summary


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(out_dir: Path, html: bool = False) -> dict:
    """Re-render summary.json (and optionally report.html) from the CSVs in *out_dir*."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise ConfigError(f"output directory {out_dir} not found")
    frames: dict[str, pd.DataFrame] = {}
    for name in ("energy_ledger", "stability", "diagnostics", "interface", "convergence"):
        path = out_dir / f"{name}.csv"
        if path.exists():
            frames[name] = read_csv(path).drop(columns="schema_version", errors="ignore")
    if not frames:
        raise ConfigError(f"no run outputs in {out_dir}")

    summary: dict = {}
    previous = out_dir / "summary.json"
    if previous.exists():
        old = read_json(previous)
        summary.update({k: old[k] for k in ("name", "digest", "eps", "h", "tau", "scheme", "alpha") if k in old})
    if "energy_ledger" in frames:
        summary["ledger"] = analysis.summarize_ledger(frames["energy_ledger"])
    if "stability" in frames:
        stability = frames["stability"]
        summary["final"] = stability.iloc[-1].to_dict()
        if "measured_radius" in stability:
            geometry = read_json(out_dir / "geometry.json") if (out_dir / "geometry.json").exists() else {}
            r0 = (geometry.get("reference") or {}).get("r0")
            if r0 is not None:
                summary["radius_law"] = analysis.fit_radius_law(stability["t"], stability["measured_radius"], r0)
    if "diagnostics" in frames:
        summary["diagnostics_final"] = frames["diagnostics"].iloc[-1].to_dict()
    if "convergence" in frames:
        table = frames["convergence"]
        summary["convergence"] = table.to_dict(orient="records")
        summary["partial"] = bool(table["partial"].any()) if "partial" in table else False
    if (out_dir / "calibration.json").exists():
        calibration = read_json(out_dir / "calibration.json")
        summary["calibration"] = {"passed": calibration.get("passed"), "failed": calibration.get("failed")}

    write_json(out_dir / "summary.json", summary)
    if html:
        figures = charts.report_figures(frames)
        body = "\n".join(fig.to_html(full_html=False, include_plotlyjs="cdn" if i == 0 else False)
                         for i, fig in enumerate(figures))
        write_text(out_dir / "report.html", f"<html><head><meta charset='utf-8'></head><body>\n{body}\n</body></html>\n")
    return summary
