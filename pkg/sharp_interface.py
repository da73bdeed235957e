"""Sharp interface extraction, geometry, normal velocity and BV-solution checks.

The interface of a phase field is the level set psi(u) = c0/2 of the node
field made of cell centres plus wall nodes. Polylines are oriented so that
A = {psi(u) > c0/2} lies to the left of the direction of travel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy

from models import INWARD_NORMALS, WALLS, ContactPoint, InterfaceCurve, PhaseField, Polyline, VelocitySample, Walls
from potentials import C0, EnergyModel, eval_psi

logger = logging.getLogger(__name__)

DEFAULT_BAND = (3.0, 12.0)  # in units of eps
CIRCLE_FLATNESS = 50.0
MAX_DISPLACEMENT_CELLS = 10.0
TANGENTIAL_TOL = 1e-10
HOLDER_TOL = 1.1

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(2)


class ContactBandError(ValueError):
    pass


class CorrespondenceError(RuntimeError):
    pass


class TangentialityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _extrapolate(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    return np.clip(1.5 * first - 0.5 * second, -1.0, 1.0)


def node_values(u: np.ndarray) -> np.ndarray:
    """(nx + 2, ny + 2) node field: cell values plus wall nodes by clipped extrapolation."""
    nx, ny = u.shape
    ux = np.empty((nx + 2, ny))
    ux[1:-1] = u
    ux[0] = _extrapolate(u[0], u[1])
    ux[-1] = _extrapolate(u[-1], u[-2])
    nodes = np.empty((nx + 2, ny + 2))
    nodes[:, 1:-1] = ux
    nodes[:, 0] = _extrapolate(ux[:, 0], ux[:, 1])
    nodes[:, -1] = _extrapolate(ux[:, -1], ux[:, -2])
    return nodes


def _node_coordinates(state: PhaseField) -> tuple[np.ndarray, np.ndarray]:
    grid = state.grid
    xs = np.concatenate([[0.0], grid.x, [grid.lx]])
    ys = np.concatenate([[0.0], grid.y, [grid.ly]])
    return xs, ys


def _shoelace(points: Sequence[np.ndarray]) -> float:
    pts = np.asarray(points)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _wet_intervals(coords: np.ndarray, phi: np.ndarray) -> list[tuple[float, float]]:
    """Intervals along a wall where phi > 0, with linear crossings."""
    intervals: list[tuple[float, float]] = []
    start = coords[0] if phi[0] > 0 else None
    for k in range(len(coords) - 1):
        a, b = phi[k], phi[k + 1]
        if (a > 0) == (b > 0):
            continue
        s = coords[k] + a / (a - b) * (coords[k + 1] - coords[k])
        if a > 0:
            intervals.append((float(start), float(s)))
            start = None
        else:
            start = s
    if start is not None:
        intervals.append((float(start), float(coords[-1])))
    return [(a, b) for a, b in intervals if b > a]


def _wall_of_key(key: tuple[str, int, int], nx: int, ny: int) -> str | None:
    kind, i, j = key
    if kind == "h":
        if j == 0:
            return "bottom"
        if j == ny + 1:
            return "top"
    else:
        if i == 0:
            return "left"
        if i == nx + 1:
            return "right"
    return None


def _vertex_normals(vertices: np.ndarray, closed: bool) -> np.ndarray:
    end = np.roll(vertices, -1, axis=0) if closed else vertices[1:]
    start = vertices if closed else vertices[:-1]
    d = end - start
    seg = np.column_stack([-d[:, 1], d[:, 0]]) / np.linalg.norm(d, axis=1)[:, None]
    if closed:
        normals = seg + np.roll(seg, 1, axis=0)
    else:
        normals = np.empty_like(vertices)
        normals[0] = seg[0]
        normals[-1] = seg[-1]
        normals[1:-1] = seg[:-1] + seg[1:]
    norm = np.linalg.norm(normals, axis=1)
    degenerate = norm < 1e-14
    if np.any(degenerate):
        # Cusp: fall back to the incoming segment normal.
        normals[degenerate] = seg[np.minimum(np.nonzero(degenerate)[0], len(seg) - 1)]
        norm = np.linalg.norm(normals, axis=1)
    return normals / norm[:, None]


def _dedupe(points: list[np.ndarray], closed: bool) -> np.ndarray:
    out = [points[0]]
    for p in points[1:]:
        if np.linalg.norm(p - out[-1]) > 1e-14:
            out.append(p)
    if closed and len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= 1e-14:
        out.pop()
    return np.array(out)


def extract_interface(state: PhaseField) -> InterfaceCurve:
    """Marching-squares contour of psi(u) at c0/2 with contact points, lengths and area."""
    grid = state.grid
    nx, ny = grid.shape
    U = node_values(state.values)
    phi = eval_psi(U) - 0.5 * C0
    inside = phi > 0
    xs, ys = _node_coordinates(state)
    cell_mask = np.asarray(state.values) > 0

    code = (
        inside[:-1, :-1].astype(int)
        + 2 * inside[1:, :-1]
        + 4 * inside[1:, 1:]
        + 8 * inside[:-1, 1:]
    )
    cell_area = np.outer(np.diff(xs), np.diff(ys))
    area = float(np.sum(cell_area[code == 15]))

    crossings: dict[tuple[str, int, int], np.ndarray] = {}

    def crossing(key: tuple[str, int, int]) -> np.ndarray:
        if key not in crossings:
            kind, i, j = key
            qi, qj = (i + 1, j) if kind == "h" else (i, j + 1)
            a, b = phi[i, j], phi[qi, qj]
            t = a / (a - b)
            crossings[key] = np.array(
                [xs[i] + t * (xs[qi] - xs[i]), ys[j] + t * (ys[qj] - ys[j])]
            )
        return crossings[key]

    segments: list[tuple[tuple, tuple]] = []
    for i, j in np.argwhere((code > 0) & (code < 15)).tolist():
        corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
        edges = [("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)]
        c_in = [bool(inside[c]) for c in corners]
        c_xy = [np.array([xs[c[0]], ys[c[1]]]) for c in corners]
        saddle = c_in in ([True, False, True, False], [False, True, False, True])
        center_in = saddle and float(np.mean([phi[c] for c in corners])) > 0

        if saddle and not center_in:
            for k in range(4):
                if c_in[k]:
                    segments.append((edges[k], edges[k - 1]))
                    area += _shoelace([c_xy[k], crossing(edges[k]), crossing(edges[k - 1])])
            continue
        if saddle:
            for k in range(4):
                if not c_in[k]:
                    segments.append((edges[k - 1], edges[k]))
        else:
            k_out = next(k for k in range(4) if c_in[k] and not c_in[(k + 1) % 4])
            k_in = next(k for k in range(4) if not c_in[k] and c_in[(k + 1) % 4])
            segments.append((edges[k_out], edges[k_in]))
        polygon = []
        for k in range(4):
            if c_in[k]:
                polygon.append(c_xy[k])
            if c_in[k] != c_in[(k + 1) % 4]:
                polygon.append(crossing(edges[k]))
        area += _shoelace(polygon)

    components, contact_points = _link(segments, crossing, nx, ny)

    wetted: dict[str, float] = {}
    wetted_intervals: dict[str, list[tuple[float, float]]] = {}
    for wall in WALLS:
        if wall in ("bottom", "top"):
            coords, values = xs, phi[:, 0 if wall == "bottom" else -1]
        else:
            coords, values = ys, phi[0 if wall == "left" else -1, :]
        intervals = _wet_intervals(coords, values)
        wetted_intervals[wall] = intervals
        wetted[wall] = float(sum(b - a for a, b in intervals))

    if not components:
        area = grid.lx * grid.ly if bool(np.all(inside)) else (area if np.any(inside) else 0.0)

    return InterfaceCurve(
        t=state.t,
        h=grid.h,
        eps=state.eps,
        lx=grid.lx,
        ly=grid.ly,
        components=components,
        contact_points=contact_points,
        interior_length=float(sum(c.length for c in components)),
        wetted=wetted,
        wetted_intervals=wetted_intervals,
        area=area,
        cell_mask=cell_mask,
    )


def _link(
    segments: list[tuple[tuple, tuple]],
    crossing: Callable[[tuple], np.ndarray],
    nx: int,
    ny: int,
) -> tuple[list[Polyline], list[ContactPoint]]:
    by_start = {s: e for s, e in segments}
    ends = {e for _, e in segments}
    used: set[tuple] = set()
    chains: list[tuple[list[tuple], bool]] = []

    for start in [s for s, _ in segments if s not in ends]:
        keys = [start]
        while keys[-1] in by_start and keys[-1] not in used:
            used.add(keys[-1])
            keys.append(by_start[keys[-1]])
        chains.append((keys, False))
    for start, _ in segments:
        if start in used:
            continue
        keys = [start]
        while keys[-1] not in used:
            used.add(keys[-1])
            keys.append(by_start[keys[-1]])
        chains.append((keys[:-1], True))

    components: list[Polyline] = []
    contacts: list[ContactPoint] = []
    for keys, closed in chains:
        vertices = _dedupe([crossing(k) for k in keys], closed)
        if len(vertices) < 2 or (closed and len(vertices) < 3):
            continue
        index = len(components)
        components.append(Polyline(vertices, _vertex_normals(vertices, closed), closed))
        if closed:
            continue
        for key, point, at_start in ((keys[0], vertices[0], True), (keys[-1], vertices[-1], False)):
            wall = _wall_of_key(key, nx, ny)
            if wall is not None:
                contacts.append(ContactPoint(float(point[0]), float(point[1]), wall, index, at_start))
    return components, contacts


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def sharp_energy(curve: InterfaceCurve, model: EnergyModel, walls: Walls | None = None) -> float:
    """c0 |interface| + jump * |wetted boundary|; only contact walls wet when *walls* is given."""
    if walls is None:
        wetted = curve.wetted_length
    else:
        wetted = sum(curve.wetted.get(w.wall, 0.0) for w in walls if w.is_contact)
    return model.c0 * curve.interior_length + model.jump * wetted


def contact_length(curve: InterfaceCurve, walls: Walls) -> float:
    return sum(curve.ly if w.wall in ("left", "right") else curve.lx for w in walls if w.is_contact)


def energy_gap(curve: InterfaceCurve, E_eps: float, model: EnergyModel, walls: Walls) -> float:
    """Relative gap between the phase-field energy and the sharp energy of its interface."""
    sharp = sharp_energy(curve, model, walls)
    diffuse = E_eps - model.sigma_floor * contact_length(curve, walls)
    return abs(diffuse - sharp) / max(abs(sharp), 1e-300)


def _wall_distance(points: np.ndarray, wall: str, lx: float, ly: float) -> np.ndarray:
    return {
        "left": points[:, 0],
        "right": lx - points[:, 0],
        "bottom": points[:, 1],
        "top": ly - points[:, 1],
    }[wall]


def _fit_normal_line(points: np.ndarray, orient: np.ndarray) -> np.ndarray:
    centred = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centred)
    direction = vt[0]
    normal = np.array([-direction[1], direction[0]])
    return normal if normal @ orient >= 0 else -normal


def _fit_normal_circle(
    points: np.ndarray, orient: np.ndarray, wall: str, contact: np.ndarray, span: float,
    lx: float, ly: float,
) -> np.ndarray | None:
    x, y = points[:, 0], points[:, 1]
    design = np.column_stack([x, y, np.ones_like(x)])
    (D, E, F), _, rank, _ = np.linalg.lstsq(design, -(x * x + y * y), rcond=None)
    if rank < 3:
        return None
    cx, cy = -0.5 * D, -0.5 * E
    r2 = cx * cx + cy * cy - F
    if r2 <= 0 or math.sqrt(r2) > CIRCLE_FLATNESS * span:
        return None
    if wall in ("bottom", "top"):
        offset = (0.0 if wall == "bottom" else ly) - cy
        disc = r2 - offset * offset
        if disc < 0:
            return None
        roots = cx + np.array([-1.0, 1.0]) * math.sqrt(disc)
        px = roots[np.argmin(np.abs(roots - contact[0]))]
        hit = np.array([px, cy + offset])
    else:
        offset = (0.0 if wall == "left" else lx) - cx
        disc = r2 - offset * offset
        if disc < 0:
            return None
        roots = cy + np.array([-1.0, 1.0]) * math.sqrt(disc)
        py = roots[np.argmin(np.abs(roots - contact[1]))]
        hit = np.array([cx + offset, py])
    normal = (hit - np.array([cx, cy])) / math.sqrt(r2)
    return normal if normal @ orient >= 0 else -normal


def contact_angle(
    curve: InterfaceCurve,
    wall,
    band: tuple[float, float] | None = None,
    fit: str = "circle",
) -> list[float]:
    """Angle arccos(nu_A . nu_wall) at each contact point on *wall*.

    *band* is the range of wall distances (default 3 eps to 12 eps) of the
    contour vertices used for the fit. ``fit="circle"`` fits a circle and falls
    back to a straight line when the arc is too flat; ``fit="line"`` always
    fits a line.
    """
    name = wall if isinstance(wall, str) else wall.wall
    if fit not in ("circle", "line"):
        raise ValueError(f"unknown fit {fit!r}")
    lo, hi = band if band is not None else (DEFAULT_BAND[0] * curve.eps, DEFAULT_BAND[1] * curve.eps)
    inward = np.asarray(INWARD_NORMALS[name])
    angles: list[float] = []
    for cp in curve.contact_points:
        if cp.wall != name:
            continue
        poly = curve.components[cp.component]
        order = np.arange(len(poly.vertices))
        if not cp.at_start:
            order = order[::-1]
        dist = _wall_distance(poly.vertices[order], name, curve.lx, curve.ly)
        top = min(hi, 0.5 * float(dist.max()))
        if top < hi:
            logger.warning("contact band on %s clipped to %.4g (curve too short)", name, top)
        beyond = np.nonzero(dist > top)[0]
        stop = beyond[0] if beyond.size else len(order)
        picked = order[:stop][dist[:stop] >= lo]
        if picked.size < 4:
            raise ContactBandError(
                f"{picked.size} contour vertices within [{lo:.3g}, {top:.3g}] of the {name} wall"
            )
        points = poly.vertices[picked]
        orient = poly.normals[picked].mean(axis=0)
        normal = None
        if fit == "circle":
            normal = _fit_normal_circle(
                points, orient, name, np.array([cp.x, cp.y]), top - lo, curve.lx, curve.ly
            )
        if normal is None:
            normal = _fit_normal_line(points, orient)
        angles.append(float(np.arccos(np.clip(normal @ inward, -1.0, 1.0))))
    return angles


# ---------------------------------------------------------------------------
# Normal velocity
# ---------------------------------------------------------------------------

def _all_segments(curve: InterfaceCurve) -> tuple[np.ndarray, np.ndarray]:
    starts, ends = [], []
    for poly in curve.components:
        a, b = poly.segments
        starts.append(a)
        ends.append(b)
    return np.concatenate(starts), np.concatenate(ends)


def normal_velocity(curve_a: InterfaceCurve, curve_b: InterfaceCurve, dt: float | None = None) -> list[VelocitySample]:
    """Normal speed at each vertex of *curve_a* from the ray hit on *curve_b*.

    V = -s / dt where s is the displacement along nu_A, so a shrinking A has
    V < 0. Vertices whose ray misses *curve_b* within 10 h get V = nan.
    """
    dt = curve_b.t - curve_a.t if dt is None else dt
    if dt <= 0:
        raise ValueError(f"snapshot interval must be positive, got {dt}")
    if curve_a.is_empty or curve_b.is_empty:
        raise ValueError("normal velocity needs two nonempty curves")
    P, Q = _all_segments(curve_b)
    d = Q - P
    limit = MAX_DISPLACEMENT_CELLS * curve_a.h

    samples: list[VelocitySample] = []
    total = hits = 0
    for index, poly in enumerate(curve_a.components):
        p, nu = poly.vertices, poly.normals
        r = P[None, :, :] - p[:, None, :]
        det = -nu[:, None, 0] * d[None, :, 1] + nu[:, None, 1] * d[None, :, 0]
        ok = np.abs(det) > 1e-14
        safe = np.where(ok, det, 1.0)
        s = (-r[..., 0] * d[None, :, 1] + r[..., 1] * d[None, :, 0]) / safe
        t = (nu[:, None, 0] * r[..., 1] - nu[:, None, 1] * r[..., 0]) / safe
        valid = ok & (t >= -1e-12) & (t <= 1 + 1e-12) & (np.abs(s) <= limit)
        s = np.where(valid, s, np.inf)
        best = np.take_along_axis(s, np.argmin(np.abs(s), axis=1)[:, None], axis=1)[:, 0]
        for k, (vertex, disp) in enumerate(zip(p, best)):
            V = -disp / dt if np.isfinite(disp) else math.nan
            samples.append(VelocitySample(float(vertex[0]), float(vertex[1]), float(V), index, k))
        total += len(p)
        hits += int(np.isfinite(best).sum())
    if hits == 0 or hits < 0.5 * total:
        raise CorrespondenceError(
            f"only {hits}/{total} vertices found a partner within {limit:.3g}; "
            "snapshots are undersampled in time"
        )
    if hits < total:
        logger.warning("normal velocity: %d of %d rays without partner", total - hits, total)
    return samples


def _vertex_weights(poly: Polyline) -> np.ndarray:
    start, end = poly.segments
    lengths = np.linalg.norm(end - start, axis=1)
    weights = np.zeros(len(poly.vertices))
    if poly.closed:
        weights += 0.5 * lengths + 0.5 * np.roll(lengths, 1)
    else:
        weights[:-1] += 0.5 * lengths
        weights[1:] += 0.5 * lengths
    return weights


def velocity_arrays(curve: InterfaceCurve, samples: Sequence[VelocitySample]) -> list[np.ndarray]:
    """Per-component V arrays with missing values filled along the polyline."""
    out = []
    for index, poly in enumerate(curve.components):
        V = np.full(len(poly.vertices), np.nan)
        for sample in samples:
            if sample.component == index and sample.vertex_index < len(V):
                V[sample.vertex_index] = sample.V
        good = np.isfinite(V)
        if good.any() and not good.all():
            positions = np.arange(len(V))
            V[~good] = np.interp(positions[~good], positions[good], V[good])
        elif not good.any():
            V[:] = 0.0
        out.append(V)
    return out


def velocity_l2(curve: InterfaceCurve, samples: Sequence[VelocitySample]) -> float:
    """int V^2 over the interface."""
    return float(sum(
        np.sum(_vertex_weights(poly) * V * V)
        for poly, V in zip(curve.components, velocity_arrays(curve, samples))
    ))


# ---------------------------------------------------------------------------
# Motion law and test-field catalogue
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestVectorField:
    """Vector field B(x, y) with its Jacobian J[i, j] = dB_i / dx_j."""

    __test__ = False

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    expression: str = ""

    def gradient_sup(self, lx: float, ly: float, samples: int = 101) -> float:
        X, Y = np.meshgrid(np.linspace(0, lx, samples), np.linspace(0, ly, samples), indexing="ij")
        return float(np.max(np.abs(self.jacobian(X, Y))))


def _vectorize(funcs, shape_of: Callable) -> Callable:
    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        return np.array(
            [np.broadcast_to(np.asarray(f(x, y), dtype=float), shape) for f in funcs]
        ).reshape(shape_of(shape))
    return evaluate


def vector_field_from_sympy(name: str, components, x: sympy.Symbol, y: sympy.Symbol) -> TestVectorField:
    matrix = sympy.Matrix(components)
    jac = matrix.jacobian([x, y])
    value_funcs = [sympy.lambdify((x, y), c, "numpy") for c in matrix]
    jac_funcs = [sympy.lambdify((x, y), jac[i, j], "numpy") for i in range(2) for j in range(2)]
    return TestVectorField(
        name=name,
        value=_vectorize(value_funcs, lambda s: (2,) + s),
        jacobian=_vectorize(jac_funcs, lambda s: (2, 2) + s),
        expression=str(tuple(matrix)),
    )


def zero_field() -> TestVectorField:
    x, y = sympy.symbols("x y", real=True)
    return vector_field_from_sympy("zero", [sympy.Integer(0), sympy.Integer(0)], x, y)


def build_catalogue(lx: float, ly: float) -> list[TestVectorField]:
    """Polynomial vector fields tangential to all four walls of (0, lx) x (0, ly)."""
    x, y = sympy.symbols("x y", real=True)
    bx = x * (lx - x)
    by = y * (ly - y)
    entries = {
        "sx": [bx, 0],
        "sy": [0, by],
        "sx_y": [bx * y, 0],
        "sy_x": [0, by * x],
        "mixed": [bx * y**2, by * x**2],
        "odd": [bx * (x - lx / 2), by * (y - ly / 2)],
    }
    return [
        vector_field_from_sympy(name, [sympy.sympify(c) for c in comps], x, y)
        for name, comps in entries.items()
    ]


def check_tangential(field_: TestVectorField, lx: float, ly: float, h: float) -> float:
    """Max |B . nu| at wall face centres; raise if above tolerance."""
    nx, ny = int(round(lx / h)), int(round(ly / h))
    xs = (np.arange(nx) + 0.5) * h
    ys = (np.arange(ny) + 0.5) * h
    worst = 0.0
    for wall, (px, py) in {
        "left": (np.zeros(ny), ys),
        "right": (np.full(ny, lx), ys),
        "bottom": (xs, np.zeros(nx)),
        "top": (xs, np.full(nx, ly)),
    }.items():
        B = field_.value(px, py)
        worst = max(worst, float(np.max(np.abs(np.asarray(INWARD_NORMALS[wall]) @ B))))
    if worst > TANGENTIAL_TOL:
        raise TangentialityError(f"test field {field_.name!r} has normal component {worst:.3g} on a wall")
    return worst


def _segment_gauss(start: np.ndarray, end: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points (k, m, 2) and weights (k, m) on each segment."""
    mid = 0.5 * (start + end)
    half = 0.5 * (end - start)
    points = mid[:, None, :] + _GAUSS_NODES[None, :, None] * half[:, None, :]
    lengths = np.linalg.norm(end - start, axis=1)
    weights = 0.5 * lengths[:, None] * _GAUSS_WEIGHTS[None, :]
    return points, weights


def _wall_point(wall: str, s: np.ndarray, lx: float, ly: float) -> tuple[np.ndarray, np.ndarray]:
    if wall == "bottom":
        return s, np.zeros_like(s)
    if wall == "top":
        return s, np.full_like(s, ly)
    if wall == "left":
        return np.zeros_like(s), s
    return np.full_like(s, lx), s


def motion_law_terms(
    curve: InterfaceCurve,
    samples: Sequence[VelocitySample],
    field_: TestVectorField,
    model: EnergyModel,
    walls: Walls,
) -> tuple[float, float, float]:
    """(interface first variation, wetted first variation, velocity term)."""
    first_variation = 0.0
    velocity_term = 0.0
    for poly, V in zip(curve.components, velocity_arrays(curve, samples)):
        start, end = poly.segments
        d = end - start
        lengths = np.linalg.norm(d, axis=1)
        keep = lengths > 0
        nu = np.column_stack([-d[keep, 1], d[keep, 0]]) / lengths[keep, None]
        points, weights = _segment_gauss(start[keep], end[keep])
        J = field_.jacobian(points[..., 0], points[..., 1])
        trace = J[0, 0] + J[1, 1]
        normal_part = np.einsum("ki,ijkm,kj->km", nu, J, nu)
        first_variation += float(np.sum(weights * (trace - normal_part)))

        B = field_.value(poly.vertices[:, 0], poly.vertices[:, 1])
        B_dot_nu = np.sum(B * poly.normals.T, axis=0)
        velocity_term += float(np.sum(_vertex_weights(poly) * B_dot_nu * V))

    wetted_term = 0.0
    for spec in walls:
        if not spec.is_contact:
            continue
        component = 0 if spec.wall in ("bottom", "top") else 1
        for a, b in curve.wetted_intervals.get(spec.wall, []):
            pieces = max(1, int(math.ceil((b - a) / curve.h)))
            knots = np.linspace(a, b, pieces + 1)
            mid = 0.5 * (knots[1:] + knots[:-1])
            half = 0.5 * np.diff(knots)
            s = (mid[:, None] + _GAUSS_NODES[None, :] * half[:, None]).ravel()
            w = (half[:, None] * _GAUSS_WEIGHTS[None, :]).ravel()
            px, py = _wall_point(spec.wall, s, curve.lx, curve.ly)
            J = field_.jacobian(px, py)
            wetted_term += float(np.sum(w * J[component, component]))
    return model.c0 * first_variation, model.jump * wetted_term, model.c0 * velocity_term


def motion_law_residual(
    curve: InterfaceCurve,
    samples: Sequence[VelocitySample],
    field_: TestVectorField,
    model: EnergyModel,
    walls: Walls = (),
) -> float:
    """|c0 int div_G B + jump int_wetted d_tau B_tau - c0 int B . nu_A V|."""
    check_tangential(field_, curve.lx, curve.ly, curve.h)
    if curve.is_empty:
        return 0.0
    interface, wetted, velocity = motion_law_terms(curve, samples, field_, model, walls)
    return abs(interface + wetted - velocity)


# ---------------------------------------------------------------------------
# Dissipation and volume continuity
# ---------------------------------------------------------------------------

@dataclass
class DissipationReport:
    times: np.ndarray
    energies: np.ndarray
    dissipation: np.ndarray
    slack: np.ndarray
    holder_ratio: float
    holder_ok: bool
    areas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def max_slack(self) -> float:
        return float(np.max(self.slack)) if self.slack.size else 0.0


def bv_dissipation_check(
    curves: Sequence[InterfaceCurve],
    model: EnergyModel,
    walls: Walls | None = None,
    initial_energy: float | None = None,
) -> DissipationReport:
    """Sharp energy plus c0 sum dt int V^2 against the initial energy, and volume continuity.

    *initial_energy* is the phase-field energy of the initial data, used in the
    1/2-Holder bound on the area; it defaults to the initial sharp energy.
    """
    if len(curves) < 2:
        raise ValueError("dissipation check needs at least two snapshots")
    times = np.array([c.t for c in curves])
    energies = np.array([sharp_energy(c, model, walls) for c in curves])
    areas = np.array([c.area for c in curves])

    dissipation = np.zeros(len(curves))
    for k in range(len(curves) - 1):
        a, b = curves[k], curves[k + 1]
        if a.is_empty or b.is_empty:
            increment = 0.0
        else:
            dt = b.t - a.t
            increment = model.c0 * dt * velocity_l2(a, normal_velocity(a, b, dt))
        dissipation[k + 1] = dissipation[k] + increment
    slack = energies + dissipation - energies[0]

    E0 = initial_energy if initial_energy is not None else float(energies[0])
    dt = np.abs(times[:, None] - times[None, :])
    da = np.abs(areas[:, None] - areas[None, :])
    off = dt > 0
    bound = np.sqrt(2.0 * dt[off]) * max(E0, 1e-300)
    ratio = float(np.max(model.c0 * da[off] / bound)) if off.any() else 0.0
    if ratio > HOLDER_TOL:
        logger.warning("area continuity ratio %.3g exceeds %.2f", ratio, HOLDER_TOL)
    return DissipationReport(
        times=times,
        energies=energies,
        dissipation=dissipation,
        slack=slack,
        holder_ratio=ratio,
        holder_ok=ratio <= HOLDER_TOL,
        areas=areas,
    )


def interface_frame_rows(curve: InterfaceCurve, samples: Sequence[VelocitySample] | None = None) -> list[dict]:
    """Rows of the interface CSV for one snapshot."""
    V_arrays = velocity_arrays(curve, samples) if samples else None
    rows = []
    for index, poly in enumerate(curve.components):
        for k, (vertex, normal) in enumerate(zip(poly.vertices, poly.normals)):
            rows.append({
                "t": curve.t,
                "component": index,
                "vertex_index": k,
                "x": float(vertex[0]),
                "y": float(vertex[1]),
                "nu_x": float(normal[0]),
                "nu_y": float(normal[1]),
                "V": float(V_arrays[index][k]) if V_arrays else math.nan,
            })
    return rows
