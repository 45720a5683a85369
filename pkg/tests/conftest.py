import numpy as np
import pytest

from crystalhydro import load_bundled_lattice
from crystalhydro.lattice import LatticeDocument, QuotientGraph


def chain_1a() -> LatticeDocument:
    """One vertex, one loop, unit basis: the integer chain."""
    g = QuotientGraph.from_edges(1, ["o"], [("o", "o", (1,), 1.0)])
    return LatticeDocument(g, np.array([[1.0]]), np.array([[0.0]]))


def chain_1b(alpha=1.0, beta=1.0) -> LatticeDocument:
    """Two-vertex cell on the chain, basis length 2, weights alpha/beta."""
    g = QuotientGraph.from_edges(
        1, ["a", "b"], [("a", "b", (0,), alpha), ("b", "a", (1,), beta)]
    )
    return LatticeDocument(g, np.array([[2.0]]), np.array([[0.0], [1.0]]))


@pytest.fixture
def ex1_doc():
    return load_bundled_lattice("ex1_alternating")


@pytest.fixture
def square_2a():
    return load_bundled_lattice("square_2a")


@pytest.fixture
def square_2b():
    return load_bundled_lattice("square_2b")


@pytest.fixture
def hexagonal_3a():
    return load_bundled_lattice("hexagonal_3a")


@pytest.fixture
def hexagonal_weighted():
    return load_bundled_lattice("ex2_hexagonal_weighted")


def random_quotient(rng, dimension=None, max_vertices=5, max_extra_edges=4):
    """Connected quotient graph with full-rank cycle shifts, random weights.

    Spanning-tree darts get zero shifts; d extra loops at vertex 0 carry the
    unit shifts so the cycle lattice always has full rank, then a few more
    random edges are thrown in.
    """
    d = int(dimension if dimension is not None else rng.integers(1, 4))
    n = int(rng.integers(1, max_vertices + 1))
    ids = [f"v{i}" for i in range(n)]
    edges = []
    for child in range(1, n):
        parent = int(rng.integers(0, child))
        shift = tuple(int(s) for s in rng.integers(-1, 2, size=d))
        edges.append((ids[parent], ids[child], shift, float(rng.uniform(0.2, 2.0))))
    for axis in range(d):
        shift = tuple(1 if k == axis else 0 for k in range(d))
        edges.append((ids[0], ids[0], shift, float(rng.uniform(0.2, 2.0))))
    for _ in range(int(rng.integers(0, max_extra_edges + 1))):
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        shift = tuple(int(s) for s in rng.integers(-2, 3, size=d))
        edges.append((ids[a], ids[b], shift, float(rng.uniform(0.2, 2.0))))
    return QuotientGraph.from_edges(d, ids, edges)


def random_unimodular(rng, d, steps=6):
    """Integer matrix with determinant +-1 built from random shear steps."""
    m = np.eye(d)
    for _ in range(steps):
        i, j = rng.integers(0, d, size=2)
        if i == j:
            continue
        shear = np.eye(d)
        shear[i, j] = int(rng.integers(-2, 3))
        m = m @ shear
    if rng.integers(0, 2):
        m[0] = -m[0]
    return m
