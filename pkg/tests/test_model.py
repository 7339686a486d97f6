import math

import numpy as np
import pytest

from moldelays.constants import ANGSTROM_TO_BOHR
from moldelays.model import (Grid1D, MoleculeModel, build_model,
                             default_ground_grid, ground_state, mean_position,
                             potential_eval, retune_screening)


def test_potential_value_at_nucleus():
    # direct evaluation: -q/a - (1-q)/sqrt(R^2 + a^2)
    m = MoleculeModel(q=0.33, a=0.374166, x1=-1.053522, x2=+1.053522)
    expected = -0.33 / 0.374166 - 0.67 / math.sqrt((m.x2 - m.x1) ** 2 + 0.374166 ** 2)
    assert potential_eval(m, m.x1) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-1.1951, abs=1e-4)


def test_potential_unit_asymptotic_charge(paper_model):
    for x in (500.0, -500.0, 2000.0):
        assert paper_model.potential(x) == pytest.approx(-1.0 / abs(x), rel=5e-3)


def test_symmetric_special_case():
    m = MoleculeModel(q=0.5, a=0.4, x1=-1.0, x2=+1.0)
    x = np.linspace(-8, 8, 101)
    assert np.allclose(m.potential(x), m.potential(-x), atol=1e-15)


def test_potential_everywhere_negative_and_smooth(paper_model):
    x = np.linspace(-50, 50, 5001)
    v = paper_model.potential(x)
    assert np.all(v < 0)
    assert np.all(np.abs(np.diff(v)) < 0.2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        MoleculeModel(q=1.2, a=0.3, x1=0.0, x2=1.0)
    with pytest.raises(ValueError):
        MoleculeModel(q=0.4, a=-0.1, x1=0.0, x2=1.0)


def test_ground_state_calibration(paper_ground):
    assert paper_ground.ionization_potential_ev == pytest.approx(29.77, abs=0.1)
    assert paper_ground.mean_position / ANGSTROM_TO_BOHR == pytest.approx(-0.16, abs=0.02)


def test_symmetric_molecule_mean_position_vanishes():
    m = MoleculeModel(q=0.5, a=0.374166, x1=-1.053522, x2=+1.053522)
    gs = ground_state(m, default_ground_grid())
    assert abs(gs.mean_position) < 1e-10


def test_grid_refinement_stability(paper_model):
    e_coarse = ground_state(paper_model, default_ground_grid(30.0, 0.05)).energy
    e_fine = ground_state(paper_model, default_ground_grid(30.0, 0.025)).energy
    assert abs(e_fine - e_coarse) < 1e-4


def test_eigensolver_residual_enforced(paper_model):
    # ground_state raises on residuals above 1e-8; a successful call is the check
    gs = ground_state(paper_model, default_ground_grid(30.0, 0.05))
    assert gs.energy < 0


def test_grid_too_coarse_rejected(paper_model):
    with pytest.raises(ValueError):
        ground_state(paper_model, default_ground_grid(30.0, 0.2))


def test_exchange_symmetry(paper_model):
    swapped = paper_model.swapped()
    x = np.linspace(-20, 20, 401)
    assert np.allclose(swapped.potential(x), paper_model.potential(x), atol=1e-14)
    mirrored = paper_model.mirrored()
    gs = ground_state(paper_model, default_ground_grid())
    gs_m = ground_state(mirrored, default_ground_grid())
    assert gs_m.energy == pytest.approx(gs.energy, abs=1e-10)
    assert gs_m.mean_position == pytest.approx(-gs.mean_position, abs=1e-8)


def test_mean_position_point_mass():
    grid = Grid1D(x_min=-5.0, x_max=5.0, n=1001)
    psi = np.zeros(grid.n)
    idx = np.argmin(np.abs(grid.x - 2.0))
    psi[idx] = 1.0 / math.sqrt(grid.dx)
    assert mean_position(psi, grid) == pytest.approx(2.0, abs=1e-12)


def test_mean_position_even_state():
    grid = Grid1D(x_min=-10.0, x_max=10.0, n=2001)
    psi = np.exp(-grid.x ** 2)
    psi /= math.sqrt(np.sum(psi ** 2) * grid.dx)
    assert abs(mean_position(psi, grid)) < 1e-12


def test_mean_position_rejects_bad_norm():
    grid = Grid1D(x_min=-5.0, x_max=5.0, n=101)
    with pytest.raises(ValueError):
        mean_position(np.ones(grid.n), grid)


def test_anchored_geometry_places_heavy_nucleus_left(paper_model):
    # charge q (weaker) on the right, 1-q (stronger) on the left
    assert paper_model.x1 > paper_model.x2
    assert paper_model.internuclear_distance == pytest.approx(1.115 * ANGSTROM_TO_BOHR)


def test_symmetric_geometry_convention():
    m = build_model(0.33, 0.198, 1.115, geometry="symmetric")
    assert m.x1 == pytest.approx(-m.x2)
    gs = ground_state(m, default_ground_grid())
    assert gs.mean_position < 0


def test_grid_contains_asymptotic_region(paper_model):
    grid = Grid1D(-2500.0, 2500.0, 33334)
    assert grid.contains_asymptotic_region(paper_model, [0.0, -0.4, 0.4])
    small = Grid1D(-20.0, 20.0, 401)
    assert not small.contains_asymptotic_region(paper_model, [0.0])


def test_retune_screening(paper_model):
    tuned, ei = retune_screening(paper_model, target_ei_ev=29.77,
                                 grid=default_ground_grid(30.0, 0.05))
    assert ei == pytest.approx(29.77, abs=1e-4)
    assert tuned.a != paper_model.a
