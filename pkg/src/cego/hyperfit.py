"""Kernel hyperparameter estimation by log-marginal-likelihood grid search.

Deliberately gradient-free: candidates live on a fixed log-spaced grid and
the best exact marginal likelihood wins, which makes the procedure
deterministic for a given data set. Lengthscale candidates are expressed as
fractions of the per-dimension domain width; output-scale and noise
candidates scale with the sample standard deviation of the values, so the
same factor grid serves problems of any magnitude.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError

from .domain import Domain
from .gp import GpModel
from .kernels import SQUARED_EXPONENTIAL, Kernel

__all__ = ["fit_hyperparameters", "LENGTHSCALE_FACTORS", "OUTPUT_SCALE_FACTORS", "NOISE_FACTORS"]

LENGTHSCALE_FACTORS = tuple(np.logspace(np.log10(0.02), np.log10(1.0), 12))
OUTPUT_SCALE_FACTORS = (0.5, 1.0, 2.0)
NOISE_FACTORS = (1e-6, 1e-4, 1e-3, 1e-2, 1e-1)

MIN_OBSERVATIONS = 4


def candidate_lengthscales(domain: Domain) -> list[tuple[float, ...]]:
    """The lengthscale grid for a domain: shared factor times each width."""
    widths = np.asarray(domain.upper) - np.asarray(domain.lower)
    return [tuple(f * widths) for f in LENGTHSCALE_FACTORS]


def fit_hyperparameters(
    points: np.ndarray,
    values: np.ndarray,
    domain: Domain,
    family: str = SQUARED_EXPONENTIAL,
) -> tuple[Kernel, float]:
    """Pick ``(Kernel, noise_variance)`` maximizing the exact marginal likelihood.

    Requires at least four observations. Candidates whose Gram matrix fails
    to factorize are skipped; if every candidate fails the data is degenerate
    and a ``LinAlgError`` is raised.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    if points.shape[0] != values.shape[0]:
        raise ValueError(
            f"got {points.shape[0]} points but {values.shape[0]} values"
        )
    if points.shape[0] < MIN_OBSERVATIONS:
        raise ValueError(
            f"hyperparameter fitting needs >= {MIN_OBSERVATIONS} observations, "
            f"got {points.shape[0]}"
        )
    if points.shape[1] != domain.dim:
        raise ValueError(f"points have dim {points.shape[1]}, domain has {domain.dim}")

    value_scale = max(float(np.std(values)), 1e-8)
    best: tuple[float, Kernel, float] | None = None
    for lengthscales in candidate_lengthscales(domain):
        for scale_factor in OUTPUT_SCALE_FACTORS:
            kernel = Kernel(family, lengthscales, scale_factor * value_scale)
            for noise_factor in NOISE_FACTORS:
                noise_variance = noise_factor * value_scale**2
                try:
                    model = GpModel(kernel, noise_variance, _X=points, _y=values)
                except LinAlgError:
                    continue
                lml = model.log_marginal_likelihood()
                if not np.isfinite(lml):
                    continue
                if best is None or lml > best[0]:
                    best = (lml, kernel, noise_variance)
    if best is None:
        raise LinAlgError("no hyperparameter candidate produced a valid factorization")
    return best[1], best[2]
