"""Quotient graphs of crystal lattices and their finite torus covers.

A crystal lattice is encoded by its finite quotient graph: a weighted
multigraph on the fundamental-domain vertices whose oriented edges (darts)
carry integer shift vectors recording how the edge crosses cell boundaries.
Scaling the deck group by N produces a finite graph on N^d copies of the
fundamental domain with periodic identification; that graph is what the
particle dynamics run on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import yaml


class LatticeError(ValueError):
    """Raised for malformed or inconsistent lattice documents."""


@dataclass(frozen=True)
class Dart:
    """One oriented edge of the quotient graph.

    ``shift`` is the integer translation applied to the head's cell, so the
    dart runs from (tail, cell 0) to (head, cell shift) in the infinite cover.
    ``inverse`` indexes the reversed dart, which carries the negated shift and
    the same weight.
    """

    tail: int
    head: int
    shift: tuple[int, ...]
    weight: float
    inverse: int


@dataclass(frozen=True)
class QuotientGraph:
    dimension: int
    vertex_ids: tuple[str, ...]
    darts: tuple[Dart, ...]

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_ids)

    @property
    def num_darts(self) -> int:
        return len(self.darts)

    def darts_out(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.darts) if e.tail == v]

    @staticmethod
    def from_edges(dimension, vertex_ids, edges) -> "QuotientGraph":
        """Build a quotient graph from once-listed unoriented edges.

        ``edges`` is a sequence of (tail_id, head_id, shift, weight).  Both
        orientations are materialized: dart k is the k-th listed edge and dart
        m + k its reverse, where m = len(edges).
        """
        if dimension < 1:
            raise LatticeError("dimension must be a positive integer")
        ids = tuple(str(v) for v in vertex_ids)
        if len(set(ids)) != len(ids) or not ids:
            raise LatticeError("vertex ids must be nonempty and unique")
        index = {v: i for i, v in enumerate(ids)}
        m = len(edges)
        forward, backward = [], []
        for k, (tail, head, shift, weight) in enumerate(edges):
            if tail not in index or head not in index:
                raise LatticeError(f"edge {k}: unknown vertex id {tail!r} or {head!r}")
            shift = tuple(int(s) for s in shift)
            if len(shift) != dimension:
                raise LatticeError(f"edge {k}: shift must have {dimension} entries")
            w = float(weight)
            if not w > 0:
                raise LatticeError(f"edge {k}: weight must be positive, got {weight}")
            forward.append(Dart(index[tail], index[head], shift, w, m + k))
            neg = tuple(-s for s in shift)
            backward.append(Dart(index[head], index[tail], neg, w, k))
        return QuotientGraph(dimension, ids, tuple(forward + backward))


def _parse_weight(w) -> float:
    if isinstance(w, str):
        return float(Fraction(w))
    return float(w)


@dataclass(frozen=True)
class LatticeDocument:
    """Parsed lattice-spec document: the quotient graph plus realization data.

    ``basis`` holds the lattice-group basis vectors as matrix columns;
    ``positions`` (optional) is an explicit periodic realization of the
    fundamental-domain vertices, one row per vertex.
    """

    graph: QuotientGraph
    basis: np.ndarray
    positions: np.ndarray | None = None


def parse_lattice_spec(text: str) -> LatticeDocument:
    """Parse a YAML lattice document and materialize both dart orientations.

    Raises LatticeError on malformed documents, nonpositive weights, unknown
    vertex ids, or a rank-deficient shift lattice.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise LatticeError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise LatticeError("lattice document must be a mapping")
    return lattice_from_mapping(doc)


def lattice_from_mapping(doc: dict) -> LatticeDocument:
    for key in ("dimension", "basis", "vertices", "edges"):
        if key not in doc:
            raise LatticeError(f"missing required key {key!r}")
    d = int(doc["dimension"])
    edges = []
    for k, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or not {"tail", "head", "shift", "weight"} <= set(e):
            raise LatticeError(f"edge {k}: need tail, head, shift, weight")
        edges.append((str(e["tail"]), str(e["head"]), e["shift"], _parse_weight(e["weight"])))
    graph = QuotientGraph.from_edges(d, doc["vertices"], edges)

    basis = np.asarray(doc["basis"], dtype=float)
    if basis.shape != (d, d):
        raise LatticeError(f"basis must list {d} vectors of {d} reals")
    basis = basis.T.copy()  # listed vectors are the basis columns u_1..u_d
    if abs(np.linalg.det(basis)) < 1e-12:
        raise LatticeError("basis vectors are linearly dependent")

    positions = None
    if doc.get("positions") is not None:
        pos = doc["positions"]
        missing = set(graph.vertex_ids) - set(map(str, pos))
        if missing:
            raise LatticeError(f"positions missing for vertices {sorted(missing)}")
        positions = np.array([pos[v] for v in graph.vertex_ids], dtype=float)
        if positions.shape != (graph.num_vertices, d):
            raise LatticeError("positions must be d-vectors")

    problems = validate(graph)
    if problems:
        raise LatticeError("; ".join(problems))
    return LatticeDocument(graph, basis, positions)


def load_lattice(path) -> LatticeDocument:
    with open(path, "r", encoding="utf-8") as f:
        return parse_lattice_spec(f.read())


def cycle_shift_rank(g: QuotientGraph) -> int:
    """Rank of the sublattice generated by shifts summed over closed walks.

    Computed from a spanning tree: assign each vertex an integer potential via
    tree darts, then each non-tree dart contributes the period
    shift(e) + theta(tail) - theta(head).
    """
    n = g.num_vertices
    theta = [None] * n
    theta[0] = np.zeros(g.dimension, dtype=np.int64)
    in_tree = [False] * g.num_darts
    frontier = [0]
    while frontier:
        v = frontier.pop()
        for i, e in enumerate(g.darts):
            if e.tail == v and theta[e.head] is None:
                theta[e.head] = theta[v] + np.asarray(e.shift, dtype=np.int64)
                in_tree[i] = in_tree[e.inverse] = True
                frontier.append(e.head)
    if any(t is None for t in theta):
        return 0  # disconnected; rank is not meaningful
    periods = []
    for i, e in enumerate(g.darts):
        if not in_tree[i]:
            periods.append(np.asarray(e.shift, dtype=np.int64) + theta[e.tail] - theta[e.head])
    if not periods:
        return 0
    return int(np.linalg.matrix_rank(np.array(periods, dtype=float)))


def is_connected(g: QuotientGraph) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        v = frontier.pop()
        for e in g.darts:
            if e.tail == v and e.head not in seen:
                seen.add(e.head)
                frontier.append(e.head)
    return len(seen) == g.num_vertices


def validate(g: QuotientGraph) -> list[str]:
    """Return diagnostics for every violated quotient-graph invariant.

    Empty list means the graph is a valid d-dimensional crystal quotient.
    """
    problems = []
    for i, e in enumerate(g.darts):
        inv = g.darts[e.inverse] if 0 <= e.inverse < g.num_darts else None
        if inv is None or inv.inverse != i:
            problems.append(f"dart {i}: inverse pairing is not an involution")
            continue
        if inv.tail != e.head or inv.head != e.tail:
            problems.append(f"dart {i}: inverse does not swap tail/head")
        if tuple(-s for s in e.shift) != inv.shift:
            problems.append(f"dart {i}: shift({i}) + shift(inverse) != 0")
        if inv.weight != e.weight:
            problems.append(f"dart {i}: weight differs from its inverse")
        if not e.weight > 0:
            problems.append(f"dart {i}: nonpositive weight {e.weight}")
    if not is_connected(g):
        problems.append("disconnected: quotient graph must be connected")
    elif cycle_shift_rank(g) < g.dimension:
        problems.append(
            f"rank-deficient: cycle shifts span rank {cycle_shift_rank(g)} < d = {g.dimension}"
        )
    return problems


def word_length(sigma, N: int) -> int:
    """Word-metric length of a group element of the N-fold discrete torus.

    Equals the torus l1 distance from the origin: each coordinate contributes
    min(|s|, N - |s|) steps along the standard generators.
    """
    total = 0
    for s in sigma:
        s = s % N
        total += min(s, N - s)
    return total


def ball_offsets(dimension: int, N: int, radius: float):
    """All torus group elements within word-metric ``radius`` of the origin."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    out = []
    for sigma in itertools.product(range(N), repeat=dimension):
        if word_length(sigma, N) <= radius:
            out.append(sigma)
    return out


@dataclass(frozen=True)
class ScaledGraph:
    """The finite N-fold torus cover of a quotient graph.

    Vertices are (fundamental vertex, cell) pairs with cells in (Z mod N)^d,
    flattened as ``cell_index * |V0| + vertex_index`` with cells enumerated
    row-major.  Dart k of cell sigma is dart ``cell_index * |E0| + k``.
    """

    base: QuotientGraph
    N: int
    dart_tail: np.ndarray = field(repr=False)
    dart_head: np.ndarray = field(repr=False)
    dart_weight: np.ndarray = field(repr=False)
    dart_base: np.ndarray = field(repr=False)
    dart_inverse: np.ndarray = field(repr=False)

    @property
    def num_vertices(self) -> int:
        return self.N**self.base.dimension * self.base.num_vertices

    @property
    def num_darts(self) -> int:
        return len(self.dart_tail)

    @property
    def num_cells(self) -> int:
        return self.N**self.base.dimension

    def cell_index(self, sigma) -> int:
        idx = 0
        for s in sigma:
            idx = idx * self.N + (s % self.N)
        return idx

    def vertex_index(self, v: int, sigma) -> int:
        return self.cell_index(sigma) * self.base.num_vertices + v

    def vertex_label(self, flat: int) -> tuple[int, tuple[int, ...]]:
        n0 = self.base.num_vertices
        v, cell = flat % n0, flat // n0
        sigma = []
        for _ in range(self.base.dimension):
            sigma.append(cell % self.N)
            cell //= self.N
        return v, tuple(reversed(sigma))

    def cell_coordinates(self) -> np.ndarray:
        """Cells in flat order as an (N^d, d) integer array."""
        d, N = self.base.dimension, self.N
        grids = np.meshgrid(*[np.arange(N)] * d, indexing="ij")
        return np.stack([a.reshape(-1) for a in grids], axis=1)


def build_scaled_graph(g: QuotientGraph, N: int) -> ScaledGraph:
    """Materialize the N-scaled finite graph of a quotient graph."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    d, n0, m0 = g.dimension, g.num_vertices, g.num_darts
    cells = np.stack(
        [a.reshape(-1) for a in np.meshgrid(*[np.arange(N)] * d, indexing="ij")], axis=1
    )  # (N^d, d), row-major
    ncells = len(cells)
    radix = N ** np.arange(d - 1, -1, -1)

    base_tail = np.array([e.tail for e in g.darts])
    base_head = np.array([e.head for e in g.darts])
    base_shift = np.array([e.shift for e in g.darts], dtype=np.int64).reshape(m0, d)
    base_weight = np.array([e.weight for e in g.darts])
    base_inv = np.array([e.inverse for e in g.darts])

    tail = (cells @ radix)[:, None] * n0 + base_tail[None, :]
    head_cells = (cells[:, None, :] + base_shift[None, :, :]) % N
    head = (head_cells @ radix) * n0 + base_head[None, :]
    weight = np.broadcast_to(base_weight, (ncells, m0))
    base_idx = np.broadcast_to(np.arange(m0), (ncells, m0))
    inverse = (head_cells @ radix) * m0 + base_inv[None, :]

    return ScaledGraph(
        base=g,
        N=N,
        dart_tail=tail.reshape(-1).astype(np.int64),
        dart_head=head.reshape(-1).astype(np.int64),
        dart_weight=np.ascontiguousarray(weight.reshape(-1)),
        dart_base=np.ascontiguousarray(base_idx.reshape(-1).astype(np.int64)),
        dart_inverse=inverse.reshape(-1).astype(np.int64),
    )


def ball_vertices(sg: ScaledGraph, center, radius: float) -> list[int]:
    """Flat indices of all vertices whose cell lies within ``radius`` of
    ``center`` in the word metric (the lifted fundamental-domain ball)."""
    out = []
    for off in ball_offsets(sg.base.dimension, sg.N, radius):
        sigma = tuple((c + o) % sg.N for c, o in zip(center, off))
        base = sg.cell_index(sigma) * sg.base.num_vertices
        out.extend(range(base, base + sg.base.num_vertices))
    return out
