from __future__ import annotations

import math

import numpy as np
import pytest

from diagnostics import (
    AdmissibilityError,
    PhaseFieldRangeError,
    TestFieldPair,
    check_admissible,
    constant_pair,
    defects,
    diagnostics_row,
    localized_energy,
    phase_field_normal,
    relative_entropy_phasefield,
    relative_entropy_primal,
)
from domain_grid import make_walls
from models import PhaseField
from solver import discrete_energy, well_prepared


def _wall_ramp(alpha: float, lx: float) -> TestFieldPair:
    cos_a = math.cos(alpha)
    return TestFieldPair(
        eta=lambda x, y: np.ones(np.shape(x)),
        xi=lambda x, y: (cos_a * (1.0 - 2.0 * np.asarray(x) / lx), 0.0),
        name="ramp",
    )


def test_localized_energy_with_unit_weight_is_discrete_energy(random_state, model_60):
    walls = make_walls(model_60, contact=("left", "top"))
    assert localized_energy(random_state, 1.0, walls) == pytest.approx(discrete_energy(random_state, walls), rel=1e-12)
    by_callable = localized_energy(random_state, lambda x, y: np.ones(np.shape(x)), walls)
    assert by_callable == pytest.approx(discrete_energy(random_state, walls), rel=1e-12)


def test_localized_energy_is_linear_in_weight(random_state, neumann_walls):
    full = localized_energy(random_state, 1.0, neumann_walls)
    assert localized_energy(random_state, 0.25, neumann_walls) == pytest.approx(0.25 * full)


def test_xi_at_broadcasts_constant_components(unit_grid):
    pair = _wall_ramp(math.pi / 3, unit_grid.lx)
    X, Y = unit_grid.mesh()
    xi = pair.xi_at(X, Y)
    assert xi.shape == (2,) + unit_grid.shape
    assert np.all(xi[1] == 0.0)


def test_admissibility(unit_grid, model_60):
    walls = make_walls(model_60, contact=("left", "right"))
    check_admissible(_wall_ramp(math.pi / 3, unit_grid.lx), unit_grid, walls)
    with pytest.raises(AdmissibilityError):
        check_admissible(constant_pair((1.0, 0.0)), unit_grid, walls)
    with pytest.raises(AdmissibilityError):
        check_admissible(constant_pair((0.0, 2.0)), unit_grid, make_walls())


def test_primal_and_integrated_relative_entropy_agree(random_state, model_60):
    walls = make_walls(model_60, contact=("left", "right"))
    pair = _wall_ramp(math.pi / 3, random_state.grid.lx)
    primal = relative_entropy_primal(random_state, pair, walls)
    ibp = relative_entropy_phasefield(random_state, pair, walls)
    assert primal == pytest.approx(ibp, rel=1e-10, abs=1e-12)


def test_relative_entropy_is_nonnegative_for_admissible_pair(unit_grid, model_60):
    walls = make_walls(model_60, contact=("left", "right"))
    X, Y = unit_grid.mesh()
    state = well_prepared(unit_grid, 0.125, np.hypot(X - 0.5, Y - 0.5) - 0.3)
    value = relative_entropy_primal(state, _wall_ramp(math.pi / 3, unit_grid.lx), walls)
    assert value >= -1e-10


def test_equipartition_vanishes_for_flat_phases(unit_grid, neumann_walls):
    state = PhaseField(np.ones(unit_grid.shape), unit_grid, eps=0.125)
    report = defects(state, constant_pair((0.0, 0.0)), neumann_walls)
    assert report.equipartition == pytest.approx(0.0)
    assert report.tilt_excess == pytest.approx(0.0)


def test_boundary_defect_vanishes_for_standard_density(random_state, model_60):
    walls = make_walls(model_60, contact=("bottom", "top"))
    report = defects(random_state, constant_pair((0.0, 0.0)), walls)
    assert report.boundary_defect == pytest.approx(0.0, abs=1e-12)


def test_defects_reject_out_of_range_field(unit_grid, neumann_walls):
    state = PhaseField(np.full(unit_grid.shape, 1.1), unit_grid, eps=0.125)
    with pytest.raises(PhaseFieldRangeError):
        defects(state, constant_pair((0.0, 0.0)), neumann_walls)


def test_phase_field_normal_uses_fallback_on_flat_regions(unit_grid):
    state = PhaseField(np.zeros(unit_grid.shape), unit_grid, eps=0.125)
    nu = phase_field_normal(state, fallback=(0.0, 1.0))
    assert np.all(nu[0] == 0.0) and np.all(nu[1] == 1.0)


def test_phase_field_normal_points_up_the_gradient(unit_grid):
    X, _ = unit_grid.mesh()
    state = well_prepared(unit_grid, 0.125, 0.5 - X)
    nu = phase_field_normal(state)
    np.testing.assert_allclose(nu[0], 1.0)


def test_diagnostics_row_has_documented_keys(random_state, model_60):
    walls = make_walls(model_60, contact=("left", "right"))
    row = diagnostics_row(random_state, _wall_ramp(math.pi / 3, 1.0), walls)
    assert set(row) == {
        "t", "equipartition", "boundary_defect", "tilt_excess", "rel_entropy_primal", "rel_entropy_ibp",
    }
    assert row["rel_entropy_primal"] == pytest.approx(row["rel_entropy_ibp"], rel=1e-10, abs=1e-12)
