"""Experiment configuration: YAML parsing, validation, canonical round-trip."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import BUNDLED_CONFIGS, bundled_lattice_path
from .lattice import LatticeDocument, LatticeError, lattice_from_mapping, parse_lattice_spec

PROCESSES = ("sep", "zrp")
RATE_KINDS = ("linear", "indicator", "tabulated")
REALIZATION_MODES = ("given", "harmonic", "standard")

_ESTIMATOR_RE = re.compile(r"^(grid|ball)\(([^)]+)\)$")


class ConfigError(ValueError):
    pass


def parse_estimator(text: str):
    """'grid(M)' -> ('grid', int M or 'auto'); 'ball(eps)' -> ('ball', float)."""
    m = _ESTIMATOR_RE.match(text.replace(" ", ""))
    if not m:
        raise ConfigError(f"estimator must look like grid(M) or ball(eps), got {text!r}")
    kind, arg = m.groups()
    if kind == "grid":
        if arg == "auto":
            return ("grid", "auto")
        cells = int(arg)
        if cells < 1:
            raise ConfigError("grid estimator needs at least one cell")
        return ("grid", cells)
    eps = float(arg)
    if not 0 < eps < 0.5:
        raise ConfigError("ball estimator radius must lie in (0, 0.5)")
    return ("ball", eps)


def format_estimator(parsed) -> str:
    kind, arg = parsed
    return f"{kind}({arg})"


@dataclass
class ExperimentConfig:
    lattice: LatticeDocument
    lattice_source: str | dict
    process: str = "sep"
    rate: str = "linear"
    rate_table: tuple[float, ...] | None = None
    rate_tail_slope: float = 1.0
    realization_mode: str = "harmonic"
    basis_override: np.ndarray | None = None
    scales: tuple[int, ...] = (16, 32, 64)
    replicas: int = 50
    times: tuple[float, ...] = (0.05,)
    rho0: str = "0.5"
    estimator: tuple = ("grid", "auto")
    seed: int = 0
    pde_grid: int = 128
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise ConfigError(f"process must be one of {PROCESSES}")
        if self.rate not in RATE_KINDS:
            raise ConfigError(f"rate must be one of {RATE_KINDS}")
        if self.realization_mode not in REALIZATION_MODES:
            raise ConfigError(f"realization must be one of {REALIZATION_MODES}")
        if not self.scales or any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError("N list must be nonempty and strictly increasing")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")
        if any(t < 0 for t in self.times) or not self.times:
            raise ConfigError("times must be nonempty and nonnegative")
        if self.pde_grid < 4:
            raise ConfigError("pde_grid must be at least 4")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


def resolve_lattice(source, base_dir: str = ".") -> LatticeDocument:
    """Resolve a lattice reference: inline mapping, file path, or bundled name."""
    if isinstance(source, dict):
        return lattice_from_mapping(source)
    source = str(source)
    candidates = [source, os.path.join(base_dir, source)]
    for path in candidates:
        if os.path.isfile(path):
            with open(path, "r", encoding="utf-8") as f:
                return parse_lattice_spec(f.read())
    if source in BUNDLED_CONFIGS:
        return parse_lattice_spec(bundled_lattice_path(source).read_text(encoding="utf-8"))
    raise ConfigError(f"cannot resolve lattice {source!r} (not a file or bundled name)")


def config_from_mapping(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("experiment config must be a mapping")
    if "lattice" not in doc:
        raise ConfigError("config needs a 'lattice' entry")
    lattice = resolve_lattice(doc["lattice"], base_dir)
    basis_override = None
    if doc.get("basis") is not None:
        basis_override = np.asarray(doc["basis"], dtype=float).T.copy()
        if basis_override.shape != (lattice.graph.dimension,) * 2:
            raise ConfigError("basis override has wrong shape")
    table = doc.get("rate_table")
    return ExperimentConfig(
        lattice=lattice,
        lattice_source=doc["lattice"],
        process=str(doc.get("process", "sep")),
        rate=str(doc.get("rate", "linear")),
        rate_table=tuple(float(x) for x in table) if table else None,
        rate_tail_slope=float(doc.get("rate_tail_slope", 1.0)),
        realization_mode=str(doc.get("realization", "harmonic")),
        basis_override=basis_override,
        scales=tuple(int(n) for n in doc.get("N", (16, 32, 64))),
        replicas=int(doc.get("replicas", 50)),
        times=tuple(float(t) for t in doc.get("times", (0.05,))),
        rho0=str(doc.get("rho0", "0.5")),
        estimator=parse_estimator(str(doc.get("estimator", "grid(auto)"))),
        seed=int(doc.get("seed", 0)),
        pde_grid=int(doc.get("pde_grid", 128)),
        output=doc.get("output"),
        workers=int(doc.get("workers", 1)),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = yaml.safe_load(f.read())
        except yaml.YAMLError as exc:
            raise ConfigError(f"not valid YAML: {exc}") from exc
    try:
        return config_from_mapping(doc, base_dir=os.path.dirname(os.path.abspath(path)))
    except LatticeError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_mapping(cfg: ExperimentConfig) -> dict:
    """Canonical mapping; feeding it back through config_from_mapping is stable."""
    out = {
        "lattice": cfg.lattice_source,
        "process": cfg.process,
        "rate": cfg.rate,
        "realization": cfg.realization_mode,
        "N": list(cfg.scales),
        "replicas": cfg.replicas,
        "times": list(cfg.times),
        "rho0": cfg.rho0,
        "estimator": format_estimator(cfg.estimator),
        "seed": cfg.seed,
        "pde_grid": cfg.pde_grid,
        "workers": cfg.workers,
    }
    if cfg.rate_table is not None:
        out["rate_table"] = list(cfg.rate_table)
        out["rate_tail_slope"] = cfg.rate_tail_slope
    if cfg.basis_override is not None:
        out["basis"] = cfg.basis_override.T.tolist()
    if cfg.output is not None:
        out["output"] = cfg.output
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_mapping(cfg), sort_keys=True)
