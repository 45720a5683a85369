"""Exact-rate kinetic Monte Carlo for exclusion and zero-range dynamics.

Both processes run on a scaled graph under diffusive time speedup: every rate
carries a factor N^2, so macroscopic times stay O(1) as the graph grows.

Exclusion moves: the generator sums the occupation swap over all oriented
darts, so a geometric edge whose endpoints differ swaps at twice its dart
weight.  Equal-occupation swaps are identity maps and are dropped; what
remains is a particle move along the unique dart whose tail is occupied, at
rate 2 N^2 p(e).

Zero-range moves: each oriented dart fires at rate N^2 p(e) g(k) where k is
the tail occupancy, moving one particle tail -> head.

Event selection is exact Gillespie: exponential waiting time at the total
rate, dart chosen proportionally to its rate through a binary indexed tree;
an event only touches the O(degree) dart rates incident to the two affected
sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import ScaledGraph
from .realization import Realization, scaled_positions
from .rng import UniformBlocks, stream
from .thermo import ThermoTables

SEP = "sep"
ZRP = "zrp"


@dataclass
class Configuration:
    """Particle occupancies on a scaled graph, flat vertex order."""

    graph: ScaledGraph
    occupation: np.ndarray
    process: str

    def __post_init__(self):
        self.occupation = np.asarray(self.occupation, dtype=np.int64)
        if self.occupation.shape != (self.graph.num_vertices,):
            raise ValueError("occupation must have one entry per vertex")
        if self.occupation.min() < 0:
            raise ValueError("occupancies must be nonnegative")
        if self.process == SEP and self.occupation.max() > 1:
            raise ValueError("exclusion occupancies must be 0 or 1")

    @property
    def total(self) -> int:
        return int(self.occupation.sum())


@dataclass
class SimResult:
    snapshots: list[tuple[float, np.ndarray]]
    event_count: int
    seed: int
    replica: int

    def field_at(self, index: int) -> np.ndarray:
        return self.snapshots[index][1]


def sample_profile_configuration(
    profile,
    sg: ScaledGraph,
    realization: Realization,
    process: str,
    thermo: ThermoTables | None,
    rng: np.random.Generator,
) -> Configuration:
    """Independent per-site sampling from the local-equilibrium marginals.

    ``profile`` maps physical torus positions (n, d array) to target densities:
    occupation probabilities for exclusion, mean occupancies for zero range.
    """
    pos = scaled_positions(realization, sg)
    rho = np.asarray(profile(pos), dtype=float)
    if rho.shape != (sg.num_vertices,):
        raise ValueError("profile must return one density per vertex")
    if rho.min() < 0:
        raise ValueError("densities must be nonnegative")
    uniforms = rng.random(sg.num_vertices)
    if process == SEP:
        if rho.max() > 1:
            raise ValueError("exclusion densities must lie in [0, 1]")
        occ = (uniforms < rho).astype(np.int64)
    elif process == ZRP:
        if thermo is None:
            raise ValueError("zero-range sampling needs thermo tables")
        occ = np.zeros(sg.num_vertices, dtype=np.int64)
        for i, (alpha, u) in enumerate(zip(rho, uniforms)):
            if alpha == 0.0:
                continue
            phi = thermo.fugacity(float(alpha))
            occ[i] = thermo.sample_occupancy(phi, np.array([u]))[0]
        # distinct sites usually share few densities; fugacity/weights are
        # memoized per phi inside ThermoTables so constant profiles stay cheap
    else:
        raise ValueError(f"unknown process {process!r}")
    return Configuration(sg, occ, process)


class FenwickTree:
    """Binary indexed tree over nonnegative rates with prefix-sum sampling."""

    __slots__ = ("size", "tree")

    def __init__(self, values):
        n = len(values)
        self.size = n
        tree = [0.0] * (n + 1)
        for i, v in enumerate(values):
            tree[i + 1] += v
            parent = i + 1 + ((i + 1) & -(i + 1))
            if parent <= n:
                tree[parent] += tree[i + 1]
        self.tree = tree

    def add(self, index: int, delta: float):
        i = index + 1
        tree = self.tree
        n = self.size
        while i <= n:
            tree[i] += delta
            i += i & -i

    def total(self) -> float:
        return self.prefix(self.size)

    def prefix(self, count: int) -> float:
        s = 0.0
        i = count
        tree = self.tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def find(self, target: float) -> int:
        """Largest index with prefix sum < target; samples when target is
        uniform on (0, total]."""
        idx = 0
        bit = 1 << (self.size.bit_length())
        tree = self.tree
        n = self.size
        while bit:
            nxt = idx + bit
            if nxt <= n and tree[nxt] < target:
                idx = nxt
                target -= tree[nxt]
            bit >>= 1
        return min(idx, n - 1)


def _incident_darts(sg: ScaledGraph) -> list[np.ndarray]:
    """For each site, the darts whose rate can change when it does."""
    touch = [[] for _ in range(sg.num_vertices)]
    for dart in range(sg.num_darts):
        touch[sg.dart_tail[dart]].append(dart)
        touch[sg.dart_head[dart]].append(dart)
    return [np.array(sorted(set(ds)), dtype=np.int64) for ds in touch]


def _out_darts(sg: ScaledGraph) -> list[np.ndarray]:
    out = [[] for _ in range(sg.num_vertices)]
    for dart in range(sg.num_darts):
        out[sg.dart_tail[dart]].append(dart)
    return [np.array(ds, dtype=np.int64) for ds in out]


def simulate(
    cfg: Configuration,
    horizon: float,
    snapshot_times,
    seed: int,
    replica: int = 0,
    thermo: ThermoTables | None = None,
) -> SimResult:
    """Run the chain to macroscopic time ``horizon``, recording snapshots.

    Snapshots hold the state at the last event time <= the requested time.
    Deterministic given (seed, replica); the particle count is conserved.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    snapshot_times = sorted(float(t) for t in snapshot_times)
    if snapshot_times and (snapshot_times[0] < 0 or snapshot_times[-1] > horizon):
        raise ValueError("snapshot times must lie in [0, horizon]")

    sg = cfg.graph
    process = cfg.process
    occ = cfg.occupation.copy()
    n2 = float(sg.N) ** 2
    tails = sg.dart_tail
    heads = sg.dart_head
    weights = sg.dart_weight

    if process == SEP:
        # movable-direction rate: both darts of the edge contribute their swap
        rate_coeff = 2.0 * n2 * weights
        rates = rate_coeff * (occ[tails] == 1) * (occ[heads] == 0)
        touched = _incident_darts(sg)
    elif process == ZRP:
        if thermo is None:
            raise ValueError("zero-range dynamics needs thermo tables (for g)")
        g = thermo.rate
        rate_coeff = n2 * weights
        rates = rate_coeff * g(occ[tails])
        touched = _out_darts(sg)
    else:
        raise ValueError(f"unknown process {process!r}")

    tree = FenwickTree(list(rates))
    rates = list(rates)
    rate_coeff = list(rate_coeff)
    tails_l = tails.tolist()
    heads_l = heads.tolist()
    occ_l = occ.tolist()
    touched = [list(map(int, ds)) for ds in touched]
    gfun = thermo.rate.scalar if (process == ZRP and thermo is not None) else None

    uniforms = UniformBlocks(stream(seed, replica, "dynamics"))
    snapshots: list[tuple[float, np.ndarray]] = []
    pending = list(snapshot_times)
    t = 0.0
    events = 0

    while True:
        total = tree.total()
        if total <= 0.0:
            break
        dt = -math.log(1.0 - uniforms.next()) / total
        if t + dt > horizon:
            break
        t += dt
        # snapshot times strictly before the event keep the pre-event state
        while pending and pending[0] < t:
            snapshots.append((pending.pop(0), np.array(occ_l, dtype=np.int64)))
        dart = tree.find((1.0 - uniforms.next()) * total)
        while rates[dart] <= 0.0:
            # float boundary landed on a zero-width slot; step to a live dart
            dart = (dart + 1) % len(rates)
        src = tails_l[dart]
        dst = heads_l[dart]
        occ_l[src] -= 1
        occ_l[dst] += 1
        events += 1
        if process == SEP:
            for d in touched[src]:
                new = rate_coeff[d] if occ_l[tails_l[d]] == 1 and occ_l[heads_l[d]] == 0 else 0.0
                if new != rates[d]:
                    tree.add(d, new - rates[d])
                    rates[d] = new
            for d in touched[dst]:
                new = rate_coeff[d] if occ_l[tails_l[d]] == 1 and occ_l[heads_l[d]] == 0 else 0.0
                if new != rates[d]:
                    tree.add(d, new - rates[d])
                    rates[d] = new
        else:
            for d in touched[src]:
                new = rate_coeff[d] * gfun(occ_l[tails_l[d]])
                if new != rates[d]:
                    tree.add(d, new - rates[d])
                    rates[d] = new
            for d in touched[dst]:
                new = rate_coeff[d] * gfun(occ_l[tails_l[d]])
                if new != rates[d]:
                    tree.add(d, new - rates[d])
                    rates[d] = new

    # no more events before the horizon: remaining snapshots see the final state
    while pending:
        snapshots.append((pending.pop(0), np.array(occ_l, dtype=np.int64)))
    return SimResult(snapshots=snapshots, event_count=events, seed=seed, replica=replica)
