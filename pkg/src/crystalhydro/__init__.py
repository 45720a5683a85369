"""Crystal lattice realizations, particle dynamics, and their diffusive limits."""

from importlib import resources

from .lattice import (
    LatticeDocument,
    LatticeError,
    QuotientGraph,
    ScaledGraph,
    ball_vertices,
    build_scaled_graph,
    load_lattice,
    parse_lattice_spec,
    validate,
    word_length,
)
from .realization import (
    Realization,
    diffusion_matrix,
    edge_vector,
    energy,
    realize_document,
    solve_harmonic,
    standard_realization,
    transform_diffusion,
)

BUNDLED_CONFIGS = (
    "ex1_alternating",
    "ex2_hexagonal_weighted",
    "square_2a",
    "square_2b",
    "hexagonal_3a",
)


def bundled_lattice_path(name: str):
    """Filesystem path of a bundled lattice document (without .yaml suffix)."""
    if name not in BUNDLED_CONFIGS:
        raise KeyError(f"no bundled config named {name!r}; have {BUNDLED_CONFIGS}")
    return resources.files(__package__) / "configs" / f"{name}.yaml"


def load_bundled_lattice(name: str) -> LatticeDocument:
    return parse_lattice_spec(bundled_lattice_path(name).read_text(encoding="utf-8"))
