import math

import numpy as np
import pytest

from crystalhydro.density import (
    ball_density,
    grid_density,
    local_average_profiles,
    replacement_defect,
    replacement_diagnostic,
)
from crystalhydro.lattice import build_scaled_graph
from crystalhydro.realization import Realization, solve_harmonic
from crystalhydro.rng import stream
from crystalhydro.simulate import SEP, ZRP, Configuration, sample_profile_configuration, simulate
from crystalhydro.thermo import ThermoTables, rate_function

from conftest import chain_1b


def setup(N, alpha=1.0, beta=2.0):
    doc = chain_1b(alpha=alpha, beta=beta)
    sg = build_scaled_graph(doc.graph, N)
    r = solve_harmonic(doc.graph, doc.basis)
    return doc, sg, r


def test_grid_density_empty_and_full():
    _, sg, r = setup(8)
    empty = Configuration(sg, np.zeros(sg.num_vertices, dtype=int), SEP)
    assert np.all(grid_density(empty, r, 4) == 0.0)
    full = Configuration(sg, np.ones(sg.num_vertices, dtype=int), SEP)
    field = grid_density(full, r, 4)
    # sites are equidistributed over cells, so every cell reads exactly 1
    assert field == pytest.approx(np.ones(4), abs=1e-12)


def test_grid_density_single_particle():
    _, sg, r = setup(8)
    occ = np.zeros(sg.num_vertices, dtype=int)
    occ[5] = 1
    cfg = Configuration(sg, occ, SEP)
    field = grid_density(cfg, r, 4)
    assert np.count_nonzero(field) == 1
    assert field.max() == pytest.approx(4 / sg.num_vertices)
    assert field.sum() / 4 == pytest.approx(1 / sg.num_vertices)


def test_grid_density_mass_normalization():
    _, sg, r = setup(16)
    rng = stream(5, 0, "init")
    cfg = sample_profile_configuration(
        lambda p: np.full(len(p), 0.5), sg, r, SEP, None, rng
    )
    field = grid_density(cfg, r, 8)
    assert field.mean() == pytest.approx(cfg.total / sg.num_vertices, rel=1e-12)


def test_ball_density_radius_validation():
    _, sg, r = setup(8)
    cfg = Configuration(sg, np.ones(sg.num_vertices, dtype=int), SEP)
    with pytest.raises(ValueError):
        ball_density(cfg, r, 0.5, np.array([[0.0]]))
    with pytest.raises(ValueError):
        ball_density(cfg, r, 0.0, np.array([[0.0]]))


def test_ball_density_uniform_counts():
    _, sg, r = setup(10)
    full = Configuration(sg, np.ones(sg.num_vertices, dtype=int), SEP)
    # radius 0.25 in fractional coords covers 1/2 of the period
    vals = ball_density(full, r, 0.25, np.array([[0.0], [0.3]]))
    assert vals == pytest.approx(np.ones(2), rel=0.15)


def test_ball_density_tracks_local_average():
    # a kernel estimate near an occupied cluster exceeds one far away
    _, sg, r = setup(20)
    occ = np.zeros(sg.num_vertices, dtype=int)
    occ[:10] = 1  # cells 0..4 occupied (2 sites per cell)
    cfg = Configuration(sg, occ, SEP)
    near = ball_density(cfg, r, 0.1, np.array([[0.1]]))[0]
    far = ball_density(cfg, r, 0.1, np.array([[0.6]]))[0]
    assert near > 0.8
    assert far < 0.2


def test_replacement_defect_empty_is_zero():
    _, sg, _ = setup(16)
    thermo = ThermoTables(rate_function("linear"))
    occ = np.zeros(sg.num_vertices, dtype=int)
    assert replacement_defect(occ, sg, thermo, radius=4.0) == 0.0


def test_replacement_defect_single_cell_window():
    # radius below one fundamental domain: averages are single-cell values
    _, sg, _ = setup(8)
    thermo = ThermoTables(rate_function("linear"))
    rng = np.random.default_rng(0)
    occ = rng.poisson(1.0, size=sg.num_vertices)
    val = replacement_defect(occ, sg, thermo, radius=0.5)
    g_avg, dens = local_average_profiles(occ, sg, thermo, 0.5)
    manual = np.abs(g_avg - dens[..., None]).mean()  # psi = identity for linear g
    assert val == pytest.approx(manual, rel=1e-12)
    assert val >= 0.0 and np.isfinite(val)


def test_local_average_constant_field():
    _, sg, _ = setup(12)
    thermo = ThermoTables(rate_function("linear"))
    occ = np.full(sg.num_vertices, 3)
    g_avg, dens = local_average_profiles(occ, sg, thermo, radius=3.0)
    assert np.allclose(g_avg, 3.0)
    assert np.allclose(dens, 3.0)


def test_replacement_diagnostic_equilibrium_decreases_in_window():
    # at equilibrium, widening the averaging window shrinks the defect
    _, sg, _ = setup(64)
    thermo = ThermoTables(rate_function("linear"))
    rng = stream(9, 0, "init")
    occ = thermo.sample_occupancy(1.0, rng.random(sg.num_vertices))
    small = replacement_defect(occ, sg, thermo, radius=2.0)
    large = replacement_defect(occ, sg, thermo, radius=16.0)
    assert large < small


def test_replacement_diagnostic_over_trajectory():
    doc, sg, r = setup(16)
    thermo = ThermoTables(rate_function("linear"))
    cfg = sample_profile_configuration(
        lambda p: np.full(len(p), 1.0), sg, r, ZRP, thermo, stream(4, 0, "init")
    )
    out = simulate(cfg, 0.01, [0.002, 0.006, 0.01], seed=4, thermo=thermo)
    times, values, avg = replacement_diagnostic(out, sg, thermo, epsilon=0.25)
    assert len(values) == 3
    assert np.all(values >= 0)
    assert avg == pytest.approx(values.mean())
    with pytest.raises(ValueError):
        replacement_diagnostic(out, sg, thermo, epsilon=0.0)
