"""Box search spaces discretized on a rectangular lattice.

Every acquisition policy in this package optimizes its surrogate score by
exhaustive evaluation over the lattice, so the grid ordering is part of the
public contract: points are enumerated in row-major order (last coordinate
varies fastest), index 0 is the lower corner and the last index is the upper
corner. Deterministic tie-breaking everywhere else in the package relies on
this ordering being stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = ["Domain", "as_point"]


def as_point(theta) -> np.ndarray:
    """Coerce a parameter vector to a 1-D float array and validate finiteness."""
    point = np.atleast_1d(np.asarray(theta, dtype=float))
    if point.ndim != 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise ValueError(f"parameter vector has non-finite entries: {point}")
    return point


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box with a per-dimension grid resolution.

    Parameters
    ----------
    lower, upper:
        Box corners, one entry per dimension, ``lower[d] < upper[d]``.
    grid_counts:
        Number of lattice points per dimension, each at least 2 so the
        corners are always on the lattice.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    grid_counts: tuple[int, ...]

    def __init__(self, lower, upper, grid_counts):
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        grid_counts = tuple(int(c) for c in np.atleast_1d(grid_counts))
        if not len(lower) == len(upper) == len(grid_counts):
            raise ValueError("lower, upper and grid_counts must have equal length")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"need lower < upper per dimension, got {lower} / {upper}")
        if any(c < 2 for c in grid_counts):
            raise ValueError(f"grid_counts must all be >= 2, got {grid_counts}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "grid_counts", grid_counts)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def grid_size(self) -> int:
        return int(np.prod(self.grid_counts))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Per-dimension lattice coordinates (inclusive of both corners)."""
        return tuple(
            np.linspace(lo, hi, n)
            for lo, hi, n in zip(self.lower, self.upper, self.grid_counts)
        )

    @cached_property
    def grid(self) -> np.ndarray:
        """All lattice points as a ``(grid_size, dim)`` array, row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        pts.setflags(write=False)
        return pts

    def point(self, index: int) -> np.ndarray:
        """Lattice point for a linear index."""
        if not 0 <= index < self.grid_size:
            raise IndexError(f"grid index {index} out of range [0, {self.grid_size})")
        return self.grid[index].copy()

    def index_of(self, theta, atol: float = 1e-9) -> int:
        """Linear index of a point that lies on the lattice.

        Raises ``ValueError`` when ``theta`` is farther than ``atol`` from any
        lattice coordinate in some dimension.
        """
        theta = as_point(theta)
        if theta.shape[0] != self.dim:
            raise ValueError(f"point has dim {theta.shape[0]}, domain has {self.dim}")
        index = 0
        for d, (axis, count) in enumerate(zip(self.axes, self.grid_counts)):
            j = int(np.argmin(np.abs(axis - theta[d])))
            if abs(axis[j] - theta[d]) > atol:
                raise ValueError(f"coordinate {theta[d]} (dim {d}) is not on the lattice")
            index = index * count + j
        return index

    def nearest_index(self, theta) -> int:
        """Linear index of the lattice point closest to ``theta`` (per-dimension snap)."""
        theta = as_point(theta)
        if theta.shape[0] != self.dim:
            raise ValueError(f"point has dim {theta.shape[0]}, domain has {self.dim}")
        index = 0
        for d, (axis, count) in enumerate(zip(self.axes, self.grid_counts)):
            index = index * count + int(np.argmin(np.abs(axis - theta[d])))
        return index

    def contains(self, theta) -> bool:
        theta = as_point(theta)
        if theta.shape[0] != self.dim:
            return False
        return bool(
            np.all(theta >= np.asarray(self.lower))
            and np.all(theta <= np.asarray(self.upper))
        )

    def sample_index(self, rng: np.random.Generator) -> int:
        """Uniform lattice index draw."""
        return int(rng.integers(self.grid_size))
