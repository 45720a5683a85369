import math

import numpy as np
import pytest

from crystalhydro.pde import (
    TorusField,
    TorusGrid,
    coarsen,
    effective_matrix,
    field_from_function,
    l1_distance,
    read_field,
    solve_fd,
    spectral_solve,
    stable_dt,
    write_field,
)


def grid_1d(m=64, length=2.0):
    return TorusGrid(np.array([[length]]), m)


def test_effective_matrix_values():
    assert effective_matrix(np.eye(2) * 2, np.eye(2)) == pytest.approx(2 * np.eye(2))
    assert effective_matrix(np.array([[8 / 3]]), np.array([[2.0]]))[0, 0] == pytest.approx(
        2 / 3, abs=1e-15
    )
    hexd = np.array([[5 / 9, 1 / 9], [1 / 9, 2 / 9]])
    u = np.array([[2.0, 0.0], [0.0, 1.0]])
    assert effective_matrix(hexd, u) == pytest.approx(
        np.array([[5 / 36, 1 / 18], [1 / 18, 2 / 9]]), abs=1e-15
    )
    with pytest.raises(ValueError):
        effective_matrix(np.eye(2), np.zeros((2, 2)))


def test_grid_validation():
    with pytest.raises(ValueError):
        TorusGrid(np.eye(2), 3)
    with pytest.raises(ValueError):
        TorusGrid(np.zeros((2, 2)), 8)


def test_constant_field_fixed_point():
    g = grid_1d(32)
    f0 = TorusField(g, np.full(32, 0.37))
    out = solve_fd(f0, np.array([[8 / 3]]), None, t=0.1)
    assert out.values == pytest.approx(np.full(32, 0.37), abs=1e-13)


def test_cosine_decay_matches_separation_of_variables():
    # rho(t,u) = 0.5 + 0.3 cos(pi u) exp(-D pi^2 t) on the circumference-2 circle
    m, d_coeff, t = 256, 8.0 / 3.0, 0.05
    g = grid_1d(m)
    f0 = field_from_function(g, lambda p: 0.5 + 0.3 * np.cos(math.pi * p[:, 0]))
    out = solve_fd(f0, np.array([[d_coeff]]), None, t=t)
    u = g.physical_points()[:, 0]
    exact = 0.5 + 0.3 * np.cos(math.pi * u) * math.exp(-d_coeff * math.pi**2 * t)
    assert np.abs(out.values.reshape(-1) - exact).max() < 2e-5


def test_spectral_identity_at_t0():
    g = grid_1d(32)
    rng = np.random.default_rng(0)
    f0 = TorusField(g, 0.5 + 0.1 * rng.standard_normal(32))
    out = spectral_solve(f0, np.array([[1.0]]), 0.0)
    assert out.values == pytest.approx(f0.values, abs=1e-15)


def test_spectral_single_mode_decay():
    g = TorusGrid(np.eye(2), 32)
    f0 = field_from_function(g, lambda p: np.cos(2 * math.pi * p[:, 0]))
    t = 0.01
    out = spectral_solve(f0, 2.0 * np.eye(2), t)
    assert out.values == pytest.approx(
        f0.values * math.exp(-8.0 * math.pi**2 * t), abs=1e-12
    )


def test_spectral_preserves_mean():
    g = TorusGrid(np.eye(2), 16)
    rng = np.random.default_rng(3)
    f0 = TorusField(g, rng.random((16, 16)))
    out = spectral_solve(f0, np.eye(2), 0.3)
    assert out.mass == pytest.approx(f0.mass, abs=1e-14)


def band_limited(grid, rng, kmax=3, base=0.5, amp=0.25):
    d, m = grid.dimension, grid.resolution
    pts = grid.fractional_points()
    vals = np.full(len(pts), base)
    for _ in range(4):
        k = rng.integers(-kmax, kmax + 1, size=d)
        if not k.any():
            continue
        phase = rng.uniform(0, 2 * math.pi)
        vals += (amp / 4) * np.cos(2 * math.pi * pts @ k + phase)
    return TorusField(grid, vals.reshape((m,) * d))


@pytest.mark.parametrize(
    "dim,m,basis,dmat",
    [
        (1, 256, np.array([[2.0]]), np.array([[8 / 3]])),
        (
            2,
            128,
            np.array([[2.0, 0.0], [0.0, 1.0]]),
            np.array([[5 / 9, 1 / 9], [1 / 9, 2 / 9]]),
        ),
    ],
)
def test_fd_matches_spectral_oracle(dim, m, basis, dmat):
    rng = np.random.default_rng(42)
    grid = TorusGrid(basis, m)
    f0 = band_limited(grid, rng)
    t = 0.05
    fine = solve_fd(f0, dmat, None, t=t)
    oracle = spectral_solve(f0, dmat, t)
    err = np.abs(fine.values - oracle.values).max()
    assert err <= 1e-4

    coarse_grid = TorusGrid(basis, m // 2)
    f0c = TorusField(coarse_grid, f0.values[(slice(None, None, 2),) * dim])
    errc = np.abs(
        solve_fd(f0c, dmat, None, t=t).values - spectral_solve(f0c, dmat, t).values
    ).max()
    assert errc >= 3.5 * err


def test_fd_mass_conservation():
    rng = np.random.default_rng(9)
    grid = TorusGrid(np.array([[2.0, 0.0], [0.0, 1.0]]), 32)
    f0 = band_limited(grid, rng)
    t = 1.0
    out = solve_fd(f0, np.array([[5 / 9, 1 / 9], [1 / 9, 2 / 9]]), None, t=t)
    assert abs(out.mass - f0.mass) / abs(f0.mass) <= 1e-12 * t


def test_fd_maximum_principle_linear():
    rng = np.random.default_rng(5)
    grid = TorusGrid(np.eye(2), 32)
    f0 = band_limited(grid, rng)
    out = solve_fd(f0, 2 * np.eye(2), None, t=0.02)
    assert out.values.min() >= f0.values.min() - 1e-10
    assert out.values.max() <= f0.values.max() + 1e-10


def test_fd_reflection_symmetry():
    # even initial data and diagonal tensor stay even, grid-exactly
    grid = TorusGrid(np.eye(2), 16)
    f0 = field_from_function(
        grid, lambda p: 0.5 + 0.2 * np.cos(2 * math.pi * p[:, 0]) * np.cos(2 * math.pi * p[:, 1])
    )
    out = solve_fd(f0, np.diag([2.0, 1.0]), None, t=0.01)
    flipped = out.values[np.r_[0, 15:0:-1], :][:, np.r_[0, 15:0:-1]]
    assert out.values == pytest.approx(flipped, abs=1e-14)


def test_fd_nonlinear_indicator_rate():
    from crystalhydro.thermo import ThermoTables, rate_function

    thermo = ThermoTables(rate_function("indicator"))
    psi = np.vectorize(thermo.fugacity, otypes=[float])
    grid = grid_1d(64)
    f0 = field_from_function(grid, lambda p: 1.0 + 0.8 * np.cos(math.pi * p[:, 0]))
    out = solve_fd(f0, np.array([[8 / 3]]), psi, t=0.05, lipschitz=thermo.rate.g_star)
    assert out.values.min() >= -1e-12
    assert out.mass == pytest.approx(f0.mass, rel=1e-12)
    # diffusion happened: the profile flattened toward the mean
    assert out.values.max() < f0.values.max()


def test_fd_rejects_unstable_dt():
    grid = grid_1d(64)
    f0 = TorusField(grid, np.full(64, 0.5))
    deff = effective_matrix(np.array([[8 / 3]]), grid.basis)
    bound = stable_dt(deff, 64)
    with pytest.raises(ValueError, match="stability"):
        solve_fd(f0, np.array([[8 / 3]]), None, t=0.1, dt=bound * 3)


def test_fd_rejects_non_spd():
    grid = grid_1d(16)
    f0 = TorusField(grid, np.full(16, 0.5))
    with pytest.raises(ValueError, match="positive definite"):
        solve_fd(f0, np.array([[-1.0]]), None, t=0.1)


def test_l1_distance_values():
    g = grid_1d(8)
    zero = TorusField(g, np.zeros(8))
    one = TorusField(g, np.ones(8))
    assert l1_distance(zero, zero) == 0.0
    assert l1_distance(zero, one) == 1.0
    spike = np.zeros(8)
    spike[3] = 8.0
    assert l1_distance(zero, TorusField(g, spike)) == 1.0
    with pytest.raises(ValueError):
        l1_distance(zero, TorusField(grid_1d(16), np.ones(16)))


def test_coarsen_block_means():
    g = grid_1d(8)
    f = TorusField(g, np.arange(8.0))
    c = coarsen(f, 4)
    assert c.values == pytest.approx([0.5, 2.5, 4.5, 6.5])
    with pytest.raises(ValueError):
        coarsen(f, 5)


def test_field_csv_roundtrip():
    grid = TorusGrid(np.array([[2.0, 0.0], [0.5, 1.0]]), 4)
    rng = np.random.default_rng(1)
    f = TorusField(grid, rng.standard_normal((4, 4)))
    back = read_field(write_field(f))
    assert back.grid.compatible(f.grid)
    assert np.array_equal(back.values, f.values)
