"""Frozen reference values: dense-grid constrained optima and metric normalizers.

The reference optimum of a benchmark is defined operationally as the best
feasible value over a dense lattice, recorded together with the lattice
resolution that produced it. The ``oracle`` CLI subcommand performs these
brute-force computations and writes/updates the JSON file; the copy shipped
in ``cego/data/references.json`` is what the metric tools and the test
suite read.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .metrics import SIGMA_SAMPLES, SIGMA_SEED, compute_normalizers
from .problems import (
    Problem,
    artificial_values,
    artificial_problem,
    williams_otto_problem,
)

__all__ = [
    "compute_reference",
    "load_references",
    "get_reference",
    "packaged_references_path",
    "DEFAULT_ORACLE_GRIDS",
]

DEFAULT_ORACLE_GRIDS = {"artificial": (2000, 2000), "williams_otto": (200, 200)}


def packaged_references_path() -> Path:
    return Path(resources.files("cego").joinpath("data", "references.json"))


def load_references(path=None) -> dict:
    target = Path(path) if path is not None else packaged_references_path()
    if not target.exists():
        raise FileNotFoundError(
            f"reference file {target} not found; generate it with the 'oracle' subcommand"
        )
    with open(target, "r", encoding="utf-8") as fh:
        return json.load(fh)


def get_reference(name: str, path=None, g_thr: float | None = None) -> dict:
    """Reference entry for a problem; validates the g_thr it was computed for."""
    refs = load_references(path)
    if name not in refs:
        raise KeyError(f"no reference entry for {name!r}; run the oracle subcommand")
    entry = refs[name]
    if g_thr is not None and not np.isclose(entry.get("g_thr", g_thr), g_thr):
        raise ValueError(
            f"reference for {name!r} was computed with g_thr={entry.get('g_thr')}, "
            f"requested {g_thr}"
        )
    return entry


def _dense_feasible_optimum(problem: Problem, batch_values) -> dict:
    """Best feasible value over the problem's lattice via full enumeration."""
    values = batch_values(problem.domain.grid)
    feasible = np.all(values[:, 1:] <= 0, axis=1)
    if not np.any(feasible):
        raise ValueError(f"{problem.name}: no feasible lattice point at this resolution")
    objectives = np.where(feasible, values[:, 0], np.inf)
    idx = int(np.argmin(objectives))
    return {
        "j_star": float(values[idx, 0]),
        "argmin_theta": [float(v) for v in problem.domain.point(idx)],
        "grid": list(problem.domain.grid_counts),
    }


def compute_reference(name: str, grid=None) -> dict:
    """Run the brute-force computations for one problem and return its entry."""
    if name == "artificial":
        grid = tuple(grid) if grid is not None else DEFAULT_ORACLE_GRIDS[name]
        g_thr = -0.6
        problem = artificial_problem(g_thr=g_thr, grid=grid, noise_std=0.0)
        entry = _dense_feasible_optimum(
            problem, lambda pts: artificial_values(pts, g_thr)
        )
        entry["g_thr"] = g_thr
    elif name == "williams_otto":
        grid = tuple(grid) if grid is not None else DEFAULT_ORACLE_GRIDS[name]
        problem = williams_otto_problem(grid=grid)
        entry = _dense_feasible_optimum(
            problem, lambda pts: np.stack([problem.evaluate(p) for p in pts])
        )
    else:
        raise ValueError(f"no reference computation defined for problem {name!r}")
    sigmas = compute_normalizers(problem)
    entry["sigmas"] = [float(s) for s in sigmas]
    entry["sigma_seed"] = SIGMA_SEED
    entry["sigma_samples"] = SIGMA_SAMPLES
    return entry


def write_reference(name: str, grid=None, path=None) -> dict:
    """Compute and merge one problem's entry into the reference file."""
    target = Path(path) if path is not None else packaged_references_path()
    refs = {}
    if target.exists():
        with open(target, "r", encoding="utf-8") as fh:
            refs = json.load(fh)
    refs[name] = compute_reference(name, grid)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(refs, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return refs[name]
