"""Empirical density estimation and the local-average diagnostic.

The empirical measure puts mass 1/|V_N| at each occupied site's torus image.
Two smoothing estimators turn it into a comparable density: histogram cells
on the fundamental parallelotope, and l1-ball kernels in lattice-basis
coordinates (the metric in which fundamental-domain translates tile balls).

The local-average diagnostic measures, per cell of the group torus, how far
the ball average of the jump rate sits from the equilibrium rate at the ball
average of the density; its decay with graph size is the quantitative content
of the local-equilibrium step in the diffusive limit.
"""

from __future__ import annotations

import math

import numpy as np

from .lattice import ScaledGraph, word_length
from .realization import Realization, scaled_fractional_positions
from .simulate import Configuration, SimResult
from .thermo import ThermoTables


def grid_density(cfg: Configuration, realization: Realization, cells_per_dim: int) -> np.ndarray:
    """Histogram estimator: per-cell particle count over expected site count.

    Cell (j_1..j_d) covers fractional coordinates [j/M, (j+1)/M); the value
    is count * M^d / |V_N|, the density relative to the uniform measure.
    """
    if cells_per_dim < 1:
        raise ValueError("need at least one cell per dimension")
    sg = cfg.graph
    d = sg.base.dimension
    frac = scaled_fractional_positions(realization, sg)
    idx = np.floor(frac * cells_per_dim).astype(np.int64) % cells_per_dim
    flat = np.zeros(cells_per_dim**d, dtype=float)
    radix = cells_per_dim ** np.arange(d - 1, -1, -1)
    np.add.at(flat, idx @ radix, cfg.occupation.astype(float))
    flat *= cells_per_dim**d / sg.num_vertices
    return flat.reshape((cells_per_dim,) * d)


def ball_density(
    cfg: Configuration,
    realization: Realization,
    radius: float,
    centers: np.ndarray,
) -> np.ndarray:
    """Kernel estimator at the given fractional-coordinate centers.

    The kernel is the normalized indicator of the l1 ball of ``radius`` in
    lattice-basis coordinates; the torus l1 ball only embeds for radius below
    half the per-coordinate period.
    """
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    if radius >= 0.5:
        raise ValueError("ball radius must be below half the torus period")
    sg = cfg.graph
    d = sg.base.dimension
    frac = scaled_fractional_positions(realization, sg)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    diff = frac[None, :, :] - centers[:, None, :]
    diff = np.abs(diff - np.round(diff))  # torus representative in (-1/2, 1/2]
    inside = diff.sum(axis=2) <= radius + 1e-15
    counts = inside @ cfg.occupation.astype(float)
    ball_volume_fraction = (2.0 * radius) ** d / math.factorial(d)
    return counts / (sg.num_vertices * ball_volume_fraction)


def _group_ball_kernel(d: int, N: int, radius: float) -> list[tuple[int, ...]]:
    """Offsets of the word-metric ball, as shifts for np.roll on the group grid."""
    offsets = []
    window = range(-int(radius), int(radius) + 1)
    if radius >= N / 2:
        window = range(N)
    import itertools

    seen = set()
    for off in itertools.product(window, repeat=d):
        canon = tuple(o % N for o in off)
        if canon in seen:
            continue
        if word_length(canon, N) <= radius:
            seen.add(canon)
            offsets.append(canon)
    return offsets


def _ball_average(grid: np.ndarray, offsets) -> np.ndarray:
    out = np.zeros_like(grid, dtype=float)
    axes = tuple(range(grid.ndim))
    for off in offsets:
        # rolled[sigma] = grid[sigma + off]
        out += np.roll(grid, shift=tuple(-o for o in off), axis=axes)
    return out / len(offsets)


def local_average_profiles(
    occupation: np.ndarray, sg: ScaledGraph, thermo: ThermoTables, radius: float
):
    """Ball averages over the group torus: (rate average, density average).

    The rate average is taken per fundamental-domain vertex over group
    translates; the density average pools all vertices of each translate.
    Returns arrays of shape (N^d grid..., |V0|) and (N^d grid...).
    """
    d, N, n0 = sg.base.dimension, sg.N, sg.base.num_vertices
    shape = (N,) * d
    occ = occupation.reshape(shape + (n0,))
    offsets = _group_ball_kernel(d, N, radius)
    g_vals = thermo.rate(occ)
    g_avg = np.stack(
        [_ball_average(g_vals[..., v], offsets) for v in range(n0)], axis=-1
    )
    dens_avg = _ball_average(occ.sum(axis=-1) / n0, offsets)
    return g_avg, dens_avg


def replacement_defect(
    occupation: np.ndarray, sg: ScaledGraph, thermo: ThermoTables, radius: float
) -> float:
    """Space-averaged |ball-average of g - equilibrium g at ball density|."""
    g_avg, dens_avg = local_average_profiles(occupation, sg, thermo, radius)
    psi = np.vectorize(thermo.fugacity, otypes=[float])(dens_avg)
    return float(np.abs(g_avg - psi[..., None]).mean())


def replacement_diagnostic(
    result: SimResult, sg: ScaledGraph, thermo: ThermoTables, epsilon: float
):
    """Per-snapshot replacement defect with averaging window epsilon * N.

    Returns (times, values, time_average).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    radius = epsilon * sg.N
    times, values = [], []
    for t, occ in result.snapshots:
        times.append(t)
        values.append(replacement_defect(occ, sg, thermo, radius))
    avg = float(np.mean(values)) if values else 0.0
    return np.array(times), np.array(values), avg
