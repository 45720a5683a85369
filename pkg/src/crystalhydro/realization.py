"""Periodic, harmonic, and standard realizations of crystal quotient graphs.

A realization places the fundamental-domain vertices in R^d and fixes the
lattice group through a basis matrix; every dart then gets a displacement
vector.  From those displacements come the diffusion matrix (the coefficient
tensor of the macroscopic density equation), the elastic energy, the harmonic
(zero-tension) solution, and the volume-preserving rescaling that makes the
diffusion matrix isotropic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import LatticeDocument, QuotientGraph, ScaledGraph

HARMONIC_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Realization:
    """Vertex positions plus the lattice-group basis (columns of ``basis``)."""

    graph: QuotientGraph
    basis: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.det(self.basis)) < 1e-14:
            raise ValueError("lattice basis must be invertible")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")


def edge_vector(r: Realization, dart: int) -> np.ndarray:
    e = r.graph.darts[dart]
    return r.positions[e.head] - r.positions[e.tail] + r.basis @ np.asarray(e.shift, float)


def edge_vectors(r: Realization) -> np.ndarray:
    """Displacement vectors of all darts, one row per dart."""
    g = r.graph
    tails = np.array([e.tail for e in g.darts])
    heads = np.array([e.head for e in g.darts])
    shifts = np.array([e.shift for e in g.darts], dtype=float).reshape(g.num_darts, g.dimension)
    return r.positions[heads] - r.positions[tails] + shifts @ r.basis.T


def dart_weights(g: QuotientGraph) -> np.ndarray:
    return np.array([e.weight for e in g.darts])


def diffusion_matrix(r: Realization) -> np.ndarray:
    """(1/|V0|) sum over oriented darts of weight * v v^T.

    Oriented darts count each geometric edge twice; that convention is what
    the worked lattice examples and the limit equation both use.
    """
    v = edge_vectors(r)
    w = dart_weights(r.graph)
    return (v.T * w) @ v / r.graph.num_vertices


def energy(r: Realization) -> float:
    """Half the weighted sum of squared dart lengths (oriented darts)."""
    v = edge_vectors(r)
    w = dart_weights(r.graph)
    return 0.5 * float(w @ (v * v).sum(axis=1))


def harmonic_residual(r: Realization) -> float:
    """Max over vertices of the sup-norm of the weighted tension sum."""
    v = edge_vectors(r)
    w = dart_weights(r.graph)
    tension = np.zeros_like(r.positions)
    for i, e in enumerate(r.graph.darts):
        tension[e.tail] += w[i] * v[i]
    return float(np.abs(tension).max())


def solve_harmonic(g: QuotientGraph, basis) -> Realization:
    """Zero-tension realization for a fixed lattice group, pinned at vertex 0.

    Solves the weighted-Laplacian system: for every vertex the weighted sum of
    outgoing displacement vectors vanishes.  The solution is unique once the
    first vertex is pinned at the origin; connectivity makes the reduced
    system positive definite, solved by dense Cholesky.
    """
    basis = np.asarray(basis, dtype=float)
    d, n = g.dimension, g.num_vertices
    if basis.shape != (d, d) or abs(np.linalg.det(basis)) < 1e-14:
        raise ValueError("basis must be an invertible d x d matrix")

    lap = np.zeros((n, n))
    rhs = np.zeros((n, d))
    for e in g.darts:
        lap[e.tail, e.tail] += e.weight
        lap[e.tail, e.head] -= e.weight
        rhs[e.tail] += e.weight * (basis @ np.asarray(e.shift, float))

    positions = np.zeros((n, d))
    if n > 1:
        # Pin vertex 0: drop its row/column; the rest is SPD for connected g.
        reduced = lap[1:, 1:]
        try:
            cho = scipy.linalg.cho_factor(reduced)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by validate
            raise ValueError("harmonic system is singular; is the graph connected?") from exc
        positions[1:] = scipy.linalg.cho_solve(cho, rhs[1:])

    r = Realization(g, basis, positions)
    res = harmonic_residual(r)
    if res > HARMONIC_RESIDUAL_TOL:
        raise ValueError(f"harmonic residual {res:.3e} exceeds {HARMONIC_RESIDUAL_TOL}")
    return r


def isotropic_rescaling(diffusion: np.ndarray) -> np.ndarray:
    """Volume-preserving matrix A with A D A^T proportional to the identity.

    Eigenvalues are sorted descending and each eigenvector's sign is fixed by
    making its largest-magnitude entry positive, so A is deterministic.
    """
    diffusion = np.asarray(diffusion, dtype=float)
    vals, vecs = np.linalg.eigh(diffusion)
    if vals.min() <= 0:
        raise ValueError("diffusion matrix must be positive definite")
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    for j in range(vecs.shape[1]):
        k = np.argmax(np.abs(vecs[:, j]))
        if vecs[k, j] < 0:
            vecs[:, j] = -vecs[:, j]
    d = len(vals)
    geo = np.prod(vals) ** (1.0 / (2 * d))
    scale = geo / np.sqrt(vals)
    return scale[:, None] * vecs.T


def standard_realization(g: QuotientGraph, r0: Realization) -> tuple[Realization, np.ndarray]:
    """Rescale a harmonic realization to the energy-minimizing one.

    Returns the harmonic realization for the transformed lattice group A U
    together with A itself; |det A| = 1 and the new diffusion matrix is
    (det D0)^(1/d) times the identity.
    """
    transform = isotropic_rescaling(diffusion_matrix(r0))
    return solve_harmonic(g, transform @ r0.basis), transform


def transform_diffusion(diffusion: np.ndarray, transform: np.ndarray) -> np.ndarray:
    """Diffusion matrix after a change of lattice basis: A D A^T."""
    transform = np.asarray(transform, dtype=float)
    if abs(np.linalg.det(transform)) < 1e-14:
        raise ValueError("basis transform must be invertible")
    return transform @ np.asarray(diffusion, float) @ transform.T


def fractional_coords(r: Realization, points: np.ndarray) -> np.ndarray:
    """Coordinates of points in the lattice basis, reduced into [0, 1)^d."""
    s = np.linalg.solve(r.basis, np.atleast_2d(points).T).T
    return np.mod(s, 1.0)


def reduce_to_cell(r: Realization, point) -> np.ndarray:
    """Canonical representative of a point in the fundamental parallelotope."""
    s = fractional_coords(r, np.asarray(point, dtype=float))
    return (r.basis @ s.T).T[0]


def scaled_position(r: Realization, N: int, vertex: int, sigma) -> np.ndarray:
    """Torus image of scaled-graph vertex (vertex, sigma) under the 1/N map."""
    raw = (r.positions[vertex] + r.basis @ np.asarray(sigma, float)) / N
    return reduce_to_cell(r, raw)


def scaled_fractional_positions(r: Realization, sg: ScaledGraph) -> np.ndarray:
    """Fractional torus coordinates of every scaled-graph vertex (flat order)."""
    n0 = r.graph.num_vertices
    frac0 = np.linalg.solve(r.basis, r.positions.T).T  # (n0, d)
    cells = sg.cell_coordinates()  # (ncells, d)
    s = (frac0[None, :, :] + cells[:, None, :]) / sg.N
    return np.mod(s.reshape(-1, r.graph.dimension), 1.0)


def scaled_positions(r: Realization, sg: ScaledGraph) -> np.ndarray:
    """Physical torus positions of every scaled-graph vertex (flat order)."""
    return scaled_fractional_positions(r, sg) @ r.basis.T


def realize_document(doc: LatticeDocument, mode: str):
    """Realize a parsed lattice document.

    mode 'given' uses the document's explicit positions, 'harmonic' solves the
    zero-tension system for the document basis, and 'standard' additionally
    rescales the lattice group to make the diffusion matrix isotropic.
    Returns (realization, transform) where transform is None unless
    mode == 'standard'.
    """
    if mode == "given":
        if doc.positions is None:
            raise ValueError("document has no positions; use mode 'harmonic'")
        return Realization(doc.graph, doc.basis, doc.positions.copy()), None
    if mode == "harmonic":
        return solve_harmonic(doc.graph, doc.basis), None
    if mode == "standard":
        base = solve_harmonic(doc.graph, doc.basis)
        return standard_realization(doc.graph, base)
    raise ValueError(f"unknown realization mode {mode!r}")
