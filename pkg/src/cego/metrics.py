"""Solution-quality metrics computed from run logs.

The central quantity is the constrained regret of a sample sequence: the
best over sampled steps of positive-part suboptimality plus summed
positive-part constraint violations. Its normalized cousin divides each
term by a per-problem scale (standard deviations of the outputs over a
seeded uniform sample of the lattice) so that outputs of different physical
magnitudes can be added.

All metrics prefer the noiseless oracle values stored in a record and fall
back to the measured values when the problem is not pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .problems import Problem

__all__ = [
    "RunRecord",
    "constrained_regret",
    "regret_contribution",
    "normalized_regret_violation",
    "best_so_far_series",
    "cumulative_violation",
    "compute_normalizers",
    "SIGMA_SEED",
]

# Dedicated seed for the normalizer sample; recorded alongside the sigmas.
SIGMA_SEED = 202303
SIGMA_SAMPLES = 10_000


@dataclass(frozen=True)
class RunRecord:
    """One step of one run: where we sampled and what we measured."""

    t: int
    theta: tuple[float, ...] | None
    y: tuple[float, ...] | None
    true_values: tuple[float, ...] | None = None
    decision: str = "sample"
    policy: str = ""
    seed: int | None = None

    def outputs(self) -> np.ndarray:
        """Oracle values when available, else measurements."""
        values = self.true_values if self.true_values is not None else self.y
        if values is None:
            raise ValueError(f"record at t={self.t} carries no output values")
        return np.asarray(values, dtype=float)


def _sampled(records: Sequence[RunRecord]) -> list[RunRecord]:
    return [r for r in records if r.decision == "sample"]


def regret_contribution(record: RunRecord, j_star: float) -> float:
    """Pointwise term ``[J - J*]^+ + sum_i [g_i]^+`` of one record."""
    values = record.outputs()
    suboptimality = max(values[0] - j_star, 0.0)
    violation = float(np.sum(np.maximum(values[1:], 0.0)))
    return suboptimality + violation


def constrained_regret(records: Sequence[RunRecord], j_star: float) -> float:
    """Min over sampled steps of the pointwise regret term; non-increasing in the prefix."""
    sampled = _sampled(records)
    if not sampled:
        raise ValueError("no sampled records to compute constrained regret from")
    return min(regret_contribution(r, j_star) for r in sampled)


def normalized_regret_violation(
    record: RunRecord,
    j_star: float | None,
    sigmas: Sequence[float],
) -> float:
    """Scale-free quality of one record.

    With a known optimum: ``[J - J*]^+ / sigma_J + sum_i [g_i]^+ / sigma_i``.
    With ``j_star=None`` (black-box mode, no reference optimum) the first
    term becomes ``J / sigma_J``.
    """
    values = record.outputs()
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.shape[0] != values.shape[0]:
        raise ValueError(f"need {values.shape[0]} sigmas, got {sigmas.shape[0]}")
    if np.any(sigmas <= 0):
        raise ValueError(f"sigmas must be positive, got {sigmas}")
    if j_star is None:
        total = values[0] / sigmas[0]
    else:
        total = max(values[0] - j_star, 0.0) / sigmas[0]
    total += float(np.sum(np.maximum(values[1:], 0.0) / sigmas[1:]))
    return float(total)


def best_so_far_series(
    records: Sequence[RunRecord],
    metric: Callable[[RunRecord], float],
) -> np.ndarray:
    """Running minimum of a per-record metric over the sampled prefix."""
    values = [metric(r) for r in _sampled(records)]
    if not values:
        return np.empty(0)
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def cumulative_violation(records: Sequence[RunRecord]) -> np.ndarray:
    """Summed positive-part violation per constraint over all sampled steps."""
    sampled = _sampled(records)
    if not sampled:
        return np.empty(0)
    stacked = np.stack([r.outputs()[1:] for r in sampled])
    return np.sum(np.maximum(stacked, 0.0), axis=0)


def compute_normalizers(
    problem: Problem,
    n_samples: int = SIGMA_SAMPLES,
    seed: int = SIGMA_SEED,
) -> np.ndarray:
    """Per-output standard deviations over a seeded uniform sample of the lattice."""
    rng = np.random.default_rng(seed)
    indices = rng.integers(problem.domain.grid_size, size=n_samples)
    values = np.stack([problem.evaluate(problem.domain.point(int(i))) for i in indices])
    return np.std(values, axis=0)
