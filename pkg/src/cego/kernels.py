"""Stationary covariance functions for the surrogate models.

Two families are supported: squared-exponential for smooth targets and
Matern-5/2 for moderately rough ones. Both use per-dimension lengthscales
(ARD) and a scalar output scale ``s`` with prior variance ``s**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import as_point

__all__ = ["Kernel", "kernel_eval", "SQUARED_EXPONENTIAL", "MATERN52"]

SQUARED_EXPONENTIAL = "squared_exponential"
MATERN52 = "matern52"
_FAMILIES = (SQUARED_EXPONENTIAL, MATERN52)


@dataclass(frozen=True)
class Kernel:
    family: str
    lengthscales: tuple[float, ...]
    output_scale: float = 1.0

    def __init__(self, family, lengthscales, output_scale=1.0):
        if family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {family!r}, expected one of {_FAMILIES}")
        lengthscales = tuple(float(v) for v in np.atleast_1d(lengthscales))
        if any(ls <= 0 for ls in lengthscales):
            raise ValueError(f"lengthscales must be positive, got {lengthscales}")
        if output_scale <= 0:
            raise ValueError(f"output_scale must be positive, got {output_scale}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "lengthscales", lengthscales)
        object.__setattr__(self, "output_scale", float(output_scale))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def prior_variance(self) -> float:
        return self.output_scale**2

    def cross(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Cross-covariance matrix between two point sets, shape ``(len(a), len(b))``."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if a.shape[1] != self.dim or b.shape[1] != self.dim:
            raise ValueError(
                f"points have dims {a.shape[1]}/{b.shape[1]}, kernel has {self.dim}"
            )
        ls = np.asarray(self.lengthscales)
        diff = a[:, None, :] / ls - b[None, :, :] / ls
        sq = np.sum(diff * diff, axis=-1)
        if self.family == SQUARED_EXPONENTIAL:
            return self.prior_variance * np.exp(-0.5 * sq)
        # Matern-5/2 in terms of the scaled distance r.
        r = np.sqrt(np.maximum(sq, 0.0))
        sqrt5_r = np.sqrt(5.0) * r
        return self.prior_variance * (1.0 + sqrt5_r + (5.0 / 3.0) * sq) * np.exp(-sqrt5_r)

    def gram(self, points: np.ndarray) -> np.ndarray:
        """Symmetric Gram matrix of a point set."""
        gram = self.cross(points, points)
        # Enforce exact symmetry; float noise here would leak into Cholesky checks.
        return 0.5 * (gram + gram.T)

    def __call__(self, a, b) -> float:
        return kernel_eval(self, a, b)


def kernel_eval(kernel: Kernel, a, b) -> float:
    """Scalar covariance ``k(a, b)``; symmetric with ``k(x, x) = output_scale**2``."""
    a = as_point(a)
    b = as_point(b)
    if a.shape[0] != kernel.dim or b.shape[0] != kernel.dim:
        raise ValueError(
            f"points have dims {a.shape[0]}/{b.shape[0]}, kernel has {kernel.dim}"
        )
    return float(kernel.cross(a[None, :], b[None, :])[0, 0])
