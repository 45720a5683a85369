"""Reference solver for d rho/dt = div(D grad f(rho)) on the flat torus.

Fields live on a regular M^d grid in fractional coordinates over the
fundamental parallelotope; the physical anisotropy enters through the
effective matrix B^{-1} D B^{-T} for lattice basis B.  The explicit
finite-difference scheme handles the quasi-linear case (f nonlinear); the
Fourier solver is exact for band-limited data in the linear case and serves
as the independent oracle.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

MIN_RESOLUTION = 4


@dataclass(frozen=True)
class TorusGrid:
    """M grid points per dimension at fractional coordinates j/M, basis columns in ``basis``."""

    basis: np.ndarray
    resolution: int

    def __post_init__(self):
        if self.resolution < MIN_RESOLUTION:
            raise ValueError(f"resolution must be at least {MIN_RESOLUTION}")
        if abs(np.linalg.det(self.basis)) < 1e-14:
            raise ValueError("grid basis must be invertible")

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    def fractional_points(self) -> np.ndarray:
        """All grid points in fractional coordinates, shape (M^d, d)."""
        d, m = self.dimension, self.resolution
        axes = [np.arange(m) / m] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([a.reshape(-1) for a in mesh], axis=1)

    def physical_points(self) -> np.ndarray:
        return self.fractional_points() @ self.basis.T

    def compatible(self, other: "TorusGrid") -> bool:
        return self.resolution == other.resolution and np.allclose(
            self.basis, other.basis, atol=1e-12
        )


@dataclass
class TorusField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        d, m = self.grid.dimension, self.grid.resolution
        self.values = np.asarray(self.values, dtype=float).reshape((m,) * d)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def mass(self) -> float:
        """Integral against the normalized volume: the mean value."""
        return float(self.values.mean())


def field_from_function(grid: TorusGrid, fn) -> TorusField:
    """Sample a function of physical position at the grid points."""
    vals = np.asarray(fn(grid.physical_points()), dtype=float)
    return TorusField(grid, vals.reshape((grid.resolution,) * grid.dimension))


def effective_matrix(diffusion: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Diffusion tensor in fractional coordinates: B^{-1} D B^{-T}."""
    basis = np.asarray(basis, dtype=float)
    if abs(np.linalg.det(basis)) < 1e-14:
        raise ValueError("basis must be invertible")
    inv = np.linalg.inv(basis)
    out = inv @ np.asarray(diffusion, float) @ inv.T
    return 0.5 * (out + out.T)


def stable_dt(diffusion_eff: np.ndarray, resolution: int, lipschitz: float = 1.0) -> float:
    """Default explicit step: 0.25 h^2 / (d * lambda_max * max(1, Lipschitz))."""
    d = diffusion_eff.shape[0]
    lam = float(np.linalg.eigvalsh(diffusion_eff).max())
    h = 1.0 / resolution
    return 0.25 * h * h / (d * lam * max(1.0, lipschitz))


def _second_difference(w: np.ndarray, axis: int) -> np.ndarray:
    return np.roll(w, -1, axis=axis) + np.roll(w, 1, axis=axis) - 2.0 * w


def _cross_difference(w: np.ndarray, ax1: int, ax2: int) -> np.ndarray:
    # symmetric four-corner stencil, spacing h in both directions
    pp = np.roll(np.roll(w, -1, axis=ax1), -1, axis=ax2)
    mm = np.roll(np.roll(w, 1, axis=ax1), 1, axis=ax2)
    pm = np.roll(np.roll(w, -1, axis=ax1), 1, axis=ax2)
    mp = np.roll(np.roll(w, 1, axis=ax1), -1, axis=ax2)
    return 0.25 * (pp + mm - pm - mp)


def solve_fd(
    field0: TorusField,
    diffusion: np.ndarray,
    nonlinearity=None,
    t: float = 0.0,
    dt: float | None = None,
    lipschitz: float = 1.0,
) -> TorusField:
    """Explicit conservative finite differences up to time ``t``.

    ``nonlinearity`` maps density to mobility potential (identity when None);
    the scheme evolves rho via second differences of f(rho).  Every stencil
    is a difference of lattice shifts, so the total mass is conserved to
    rounding regardless of the coefficients.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    grid = field0.grid
    d, m = grid.dimension, grid.resolution
    deff = effective_matrix(diffusion, grid.basis)
    if np.linalg.eigvalsh(deff).min() <= 0:
        raise ValueError("diffusion matrix must be positive definite")
    bound = stable_dt(deff, m, lipschitz)
    if dt is not None:
        if dt > bound * (1.0 + 1e-12):
            raise ValueError(f"dt={dt} exceeds the stability bound {bound:.3e}")
    else:
        dt = bound
    if t == 0.0:
        return TorusField(grid, field0.values.copy())

    steps = max(1, math.ceil(t / dt))
    dt = t / steps
    h2 = (1.0 / m) ** 2
    rho = field0.values.copy()
    for _ in range(steps):
        w = rho if nonlinearity is None else nonlinearity(rho)
        upd = np.zeros_like(rho)
        for i in range(d):
            upd += deff[i, i] * _second_difference(w, i)
            for j in range(i + 1, d):
                upd += 2.0 * deff[i, j] * _cross_difference(w, i, j)
        rho += (dt / h2) * upd
    return TorusField(grid, rho)


def spectral_solve(field0: TorusField, diffusion: np.ndarray, t: float) -> TorusField:
    """Exact Fourier evolution for the linear equation.

    Mode k is damped by exp(-4 pi^2 k.Deff k t); only valid when the
    mobility potential is the identity (exclusion, or linear-rate zero range).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    grid = field0.grid
    d, m = grid.dimension, grid.resolution
    deff = effective_matrix(diffusion, grid.basis)
    spectrum = np.fft.fftn(field0.values)
    freqs = [np.fft.fftfreq(m) * m for _ in range(d)]
    mesh = np.meshgrid(*freqs, indexing="ij")
    quad = np.zeros_like(mesh[0])
    for i in range(d):
        for j in range(d):
            quad = quad + deff[i, j] * mesh[i] * mesh[j]
    damped = spectrum * np.exp(-4.0 * math.pi**2 * quad * t)
    return TorusField(grid, np.fft.ifftn(damped).real)


def l1_distance(a: TorusField, b: TorusField) -> float:
    """Volume-normalized l1 distance between fields on the same grid."""
    if not a.grid.compatible(b.grid):
        raise ValueError("fields live on different grids")
    return float(np.abs(a.values - b.values).mean())


def coarsen(field: TorusField, resolution: int) -> TorusField:
    """Block-average down to a divisor resolution (cell means)."""
    m = field.grid.resolution
    if m % resolution != 0:
        raise ValueError(f"target resolution {resolution} must divide {m}")
    f = m // resolution
    d = field.grid.dimension
    vals = field.values
    for axis in range(d):
        shape = vals.shape[:axis] + (resolution, f) + vals.shape[axis + 1 :]
        vals = vals.reshape(shape).mean(axis=axis + 1)
    return TorusField(TorusGrid(field.grid.basis, resolution), vals)


def write_field(field: TorusField) -> str:
    """CSV with header rows for d, M, and the basis entries, then one row per
    cell: fractional indices followed by the value."""
    buf = io.StringIO()
    grid = field.grid
    d, m = grid.dimension, grid.resolution
    buf.write(f"# d,{d}\n# M,{m}\n")
    buf.write("# U," + ",".join(f"{x:.17g}" for x in grid.basis.reshape(-1)) + "\n")
    buf.write(",".join(f"s{i + 1}" for i in range(d)) + ",value\n")
    idx = np.indices((m,) * d).reshape(d, -1).T
    flat = field.values.reshape(-1)
    for row, v in zip(idx, flat):
        buf.write(",".join(str(int(i)) for i in row) + f",{v:.17g}\n")
    return buf.getvalue()


def read_field(text: str) -> TorusField:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    meta = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            parts = ln.lstrip("# ").split(",")
            meta[parts[0]] = parts[1:]
        elif not ln.startswith("s1"):
            body.append(ln)
    d = int(meta["d"][0])
    m = int(meta["M"][0])
    basis = np.array([float(x) for x in meta["U"]]).reshape(d, d)
    values = np.zeros((m,) * d)
    for ln in body:
        parts = ln.split(",")
        idx = tuple(int(p) for p in parts[:d])
        values[idx] = float(parts[d])
    return TorusField(TorusGrid(basis, m), values)
