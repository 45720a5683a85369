"""Equilibrium thermodynamics of the zero-range process.

The single-site marginal of the product invariant measure at fugacity phi
puts mass phi^k / (g(1)...g(k)) on occupancy k, up to normalization.  This
module evaluates the normalization, the mean occupancy per site, and the
inverse map from target density back to fugacity, with closed forms for the
linear and indicator rate functions and truncated series otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SERIES_RELTOL = 1e-14
MAX_TERMS = 10**6
FUGACITY_TOL = 1e-12


@dataclass(frozen=True)
class RateFunction:
    """Jump rate g(k) out of a site holding k particles; g(0) = 0.

    kind 'linear' is g(k) = k, 'indicator' is g(k) = 1 for k >= 1, and
    'tabulated' takes explicit values g(1..K) with an affine tail
    g(k) = table[-1] + tail_slope * (k - K) beyond the table.
    """

    kind: str
    table: tuple[float, ...] = ()
    tail_slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "indicator", "tabulated"):
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.kind == "tabulated":
            if not self.table:
                raise ValueError("tabulated rate needs at least g(1)")
            if any(not v > 0 for v in self.table):
                raise ValueError("rates must be positive for k > 0")
            if self.tail_slope < 0:
                raise ValueError("tail slope must be nonnegative")

    def __call__(self, k):
        k = np.asarray(k)
        if self.kind == "linear":
            return k.astype(float)
        if self.kind == "indicator":
            return (k > 0).astype(float)
        kk = np.minimum(k, len(self.table))
        vals = np.concatenate(([0.0], self.table))[kk]
        tail = np.maximum(k - len(self.table), 0)
        return vals + self.tail_slope * tail

    def scalar(self, k: int) -> float:
        """Scalar g(k) without array overhead (hot path for series sums)."""
        if k <= 0:
            return 0.0
        if self.kind == "linear":
            return float(k)
        if self.kind == "indicator":
            return 1.0
        if k <= len(self.table):
            return self.table[k - 1]
        return self.table[-1] + self.tail_slope * (k - len(self.table))

    @property
    def g_star(self) -> float:
        """sup over k of |g(k+1) - g(k)|."""
        if self.kind in ("linear", "indicator"):
            return 1.0
        steps = np.diff(np.concatenate(([0.0], self.table, [self.table[-1] + self.tail_slope])))
        return float(max(np.abs(steps).max(), self.tail_slope))

    @property
    def convergence_radius(self) -> float:
        if self.kind == "indicator":
            return 1.0
        if self.kind == "tabulated" and self.tail_slope == 0.0:
            return float(self.table[-1])
        return math.inf


def rate_function(kind: str, table=None, tail_slope=1.0) -> RateFunction:
    if kind == "tabulated":
        return RateFunction("tabulated", tuple(table), float(tail_slope))
    return RateFunction(kind)


@dataclass
class ThermoTables:
    """Partition/density evaluations for one rate function, with memo caches."""

    rate: RateFunction
    _cache: dict = field(default_factory=dict, repr=False)

    def _series(self, phi: float) -> tuple[float, float]:
        """Truncated sums (Z, sum k * term) with relative tail below 1e-14.

        Stops once the geometric tail bound term * r / (1 - r) with
        r = phi / g(k+1) drops below the tolerance; requires phi inside the
        convergence region so that r < 1 eventually.
        """
        key = phi
        if key in self._cache:
            return self._cache[key]
        z_sum, k_sum = 1.0, 0.0
        term = 1.0
        for k in range(1, MAX_TERMS):
            term *= phi / self.rate.scalar(k)
            z_sum += term
            k_sum += k * term
            g_next = self.rate.scalar(k + 1)
            if phi < g_next:
                ratio = phi / g_next
                tail = term * ratio / (1.0 - ratio)
                if tail * (k + 2.0) < SERIES_RELTOL * z_sum:
                    break
        else:
            raise ValueError(f"series did not converge for phi={phi}")
        self._cache[key] = (z_sum, k_sum)
        return z_sum, k_sum

    def _check_phi(self, phi: float):
        if phi < 0:
            raise ValueError("fugacity must be nonnegative")
        radius = self.rate.convergence_radius
        if phi >= radius:
            raise ValueError(f"fugacity {phi} at or beyond convergence radius {radius}")

    def partition_function(self, phi: float) -> float:
        """Normalization Z(phi) of the single-site occupancy weights."""
        self._check_phi(phi)
        if self.rate.kind == "linear":
            return math.exp(phi)
        if self.rate.kind == "indicator":
            return 1.0 / (1.0 - phi)
        return self._series(phi)[0]

    def mean_occupation(self, phi: float) -> float:
        """Expected particles per site at fugacity phi; increasing, 0 at 0."""
        self._check_phi(phi)
        if self.rate.kind == "linear":
            return phi
        if self.rate.kind == "indicator":
            return phi / (1.0 - phi)
        z_sum, k_sum = self._series(phi)
        return k_sum / z_sum

    def fugacity(self, density: float) -> float:
        """Inverse of mean_occupation; also the equilibrium mean of g.

        Lipschitz in the density with constant g_star.
        """
        if density < 0:
            raise ValueError("density must be nonnegative")
        if density == 0:
            return 0.0
        if self.rate.kind == "linear":
            return density
        if self.rate.kind == "indicator":
            return density / (1.0 + density)
        lo, hi = 0.0, min(1.0, self.rate.convergence_radius / 2)
        radius = self.rate.convergence_radius
        while self.mean_occupation(hi) < density:
            nxt = hi * 2 if math.isinf(radius) else (hi + radius) / 2
            if nxt == hi:
                raise ValueError(f"density {density} outside the range of mean_occupation")
            lo, hi = hi, nxt
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.mean_occupation(mid) < density:
                lo = mid
            else:
                hi = mid
            if hi - lo <= FUGACITY_TOL * max(1.0, hi):
                break
        phi = 0.5 * (lo + hi)
        if abs(self.mean_occupation(phi) - density) > 1e-10 * max(1.0, density):
            raise ValueError(f"fugacity inversion failed to converge at density {density}")
        return phi

    def occupancy_weights(self, phi: float, tail_mass=1e-15) -> np.ndarray:
        """Normalized single-site pmf, truncated once the tail bound is tiny."""
        self._check_phi(phi)
        weights = [1.0]
        term = 1.0
        for k in range(1, MAX_TERMS):
            term *= phi / self.rate.scalar(k)
            weights.append(term)
            g_next = self.rate.scalar(k + 1)
            if phi < g_next and term * (phi / g_next) / (1 - phi / g_next) < tail_mass:
                break
        w = np.array(weights)
        return w / w.sum()

    def sample_occupancy(self, phi: float, uniforms: np.ndarray) -> np.ndarray:
        """Inverse-CDF occupancy samples from the marginal at fugacity phi."""
        cdf = np.cumsum(self.occupancy_weights(phi))
        return np.searchsorted(cdf, uniforms, side="right")
