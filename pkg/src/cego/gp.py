"""Exact Gaussian process regression with a cached Cholesky factorization.

A model owns one scalar output (objective or a single constraint). Updates
return a fresh model with a recomputed factorization, so callers may treat
any instance as immutable and query it concurrently between updates. With
the problem sizes this package targets (a few hundred observations at most)
a full re-factorization per update is cheap and keeps the code obviously
correct; incremental rank-1 updates are a known optimization left out on
purpose.

Posterior formulas, for observations ``X, y`` with Gram matrix ``K`` and
noise variance ``lam``::

    mean(q) = k(X, q)^T (K + lam I)^{-1} y
    var(q)  = k(q, q) - k(X, q)^T (K + lam I)^{-1} k(X, q)

Variance values in ``[-1e-9, 0)`` are clamped to zero; anything more
negative indicates a broken factorization and raises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .domain import as_point
from .kernels import Kernel

__all__ = ["GpModel", "Observation", "add_observation"]

_VARIANCE_CLAMP = 1e-9


class GpNumericsError(RuntimeError):
    """Posterior variance fell below the tolerated floating-point floor."""


@dataclass(frozen=True)
class Observation:
    """One measurement of one output at one parameter vector.

    ``output_index`` 0 is the objective; ``i >= 1`` is constraint ``i``.
    """

    point: np.ndarray
    value: float
    output_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))
        value = float(self.value)
        if not np.isfinite(value):
            raise ValueError(f"observation value must be finite, got {value}")
        object.__setattr__(self, "value", value)


class GpModel:
    """Gaussian process over one output with fixed hyperparameters.

    Parameters
    ----------
    kernel:
        Covariance function; also fixes the input dimension.
    noise_variance:
        i.i.d. Gaussian observation noise variance ``lam > 0``.
    output_index:
        Which problem output this model tracks (bookkeeping only).
    """

    def __init__(self, kernel: Kernel, noise_variance: float, output_index: int = 0,
                 _X: np.ndarray | None = None, _y: np.ndarray | None = None):
        if noise_variance <= 0:
            raise ValueError(f"noise_variance must be positive, got {noise_variance}")
        self.kernel = kernel
        self.noise_variance = float(noise_variance)
        self.output_index = int(output_index)
        self._X = np.empty((0, kernel.dim)) if _X is None else _X
        self._y = np.empty(0) if _y is None else _y
        self._chol = None
        self._alpha = None
        if len(self._y):
            self._factorize()

    # -- observation data ---------------------------------------------------

    @property
    def n_observations(self) -> int:
        return self._y.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self._X.copy()

    @property
    def values(self) -> np.ndarray:
        return self._y.copy()

    def add(self, point, value: float) -> "GpModel":
        """Return a new model with one more observation appended."""
        point = as_point(point)
        if point.shape[0] != self.kernel.dim:
            raise ValueError(f"point has dim {point.shape[0]}, model has {self.kernel.dim}")
        if not np.isfinite(value):
            raise ValueError(f"observation value must be finite, got {value}")
        X = np.vstack([self._X, point[None, :]])
        y = np.append(self._y, float(value))
        return GpModel(self.kernel, self.noise_variance, self.output_index, X, y)

    def _factorize(self):
        gram = self.kernel.gram(self._X)
        gram[np.diag_indices_from(gram)] += self.noise_variance
        # Raises scipy.linalg.LinAlgError on an ill-conditioned kernel/noise pair.
        self._chol = cholesky(gram, lower=True)
        self._alpha = cho_solve((self._chol, True), self._y)

    @property
    def cholesky_factor(self) -> np.ndarray | None:
        """Lower-triangular factor of ``K + lam I``, or None with no data."""
        return None if self._chol is None else self._chol.copy()

    # -- posterior queries ----------------------------------------------------

    def posterior(self, query) -> tuple[float, float]:
        """Posterior ``(mean, variance)`` at a single point."""
        query = as_point(query)
        means, variances = self.posterior_batch(query[None, :])
        return float(means[0]), float(variances[0])

    def posterior_batch(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and variances at many points at once.

        One triangular solve against all cross-covariance columns; this is the
        hot path of every grid-based acquisition step.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        prior_var = np.full(queries.shape[0], self.kernel.prior_variance)
        if self.n_observations == 0:
            return np.zeros(queries.shape[0]), prior_var
        k_cross = self.kernel.cross(self._X, queries)
        means = k_cross.T @ self._alpha
        v = solve_triangular(self._chol, k_cross, lower=True)
        variances = prior_var - np.sum(v * v, axis=0)
        too_negative = variances < -_VARIANCE_CLAMP
        if np.any(too_negative):
            raise GpNumericsError(
                f"posterior variance reached {variances[too_negative].min():.3e}; "
                "factorization is inconsistent with the kernel"
            )
        return means, np.maximum(variances, 0.0)

    def lcb(self, query, beta_sqrt: float) -> float:
        """Lower confidence bound ``mean - beta_sqrt * std``."""
        if beta_sqrt < 0:
            raise ValueError(f"beta_sqrt must be nonnegative, got {beta_sqrt}")
        mean, var = self.posterior(query)
        return mean - beta_sqrt * np.sqrt(var)

    def ucb(self, query, beta_sqrt: float) -> float:
        """Upper confidence bound ``mean + beta_sqrt * std``."""
        if beta_sqrt < 0:
            raise ValueError(f"beta_sqrt must be nonnegative, got {beta_sqrt}")
        mean, var = self.posterior(query)
        return mean + beta_sqrt * np.sqrt(var)

    def log_marginal_likelihood(self) -> float:
        """Exact log marginal likelihood of the stored observations."""
        if self.n_observations == 0:
            return 0.0
        t = self.n_observations
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return float(
            -0.5 * self._y @ self._alpha - 0.5 * log_det - 0.5 * t * np.log(2.0 * np.pi)
        )

    def __repr__(self):
        return (
            f"GpModel(family={self.kernel.family}, t={self.n_observations}, "
            f"lam={self.noise_variance:g}, output={self.output_index})"
        )


def add_observation(model: GpModel, obs: Observation) -> GpModel:
    """Append an observation, checking it targets the model's output."""
    if obs.output_index != model.output_index:
        raise ValueError(
            f"observation targets output {obs.output_index}, "
            f"model tracks output {model.output_index}"
        )
    return model.add(obs.point, obs.value)
