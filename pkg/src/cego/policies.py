"""Acquisition policies mapping surrogate state to the next sample.

All policies share the same mechanics: evaluate every model's posterior over
the domain lattice, derive a per-point score, and pick an extremizer with
ties broken by the smallest linear grid index. They differ in how constraint
information enters the score:

``config``
    Optimism for both objective and constraints: minimize the objective LCB
    subject to every constraint LCB being nonpositive. If some constraint's
    LCB is positive over the whole lattice no feasible point can exist at
    the chosen confidence level, and infeasibility is declared.
``cei``
    Expected improvement times the probability that all constraints hold.
``epbo``
    Objective LCB plus a fixed penalty ``rho`` times summed positive parts
    of the constraint LCBs.
``primal_dual``
    Lagrangian LCB score with multiplier updates driven by measured
    violations.
``safeopt_lite``
    Never samples outside a certified safe set grown from feasible seeds by
    Lipschitz extrapolation of the constraint UCBs. Deliberately simplified
    relative to the published SafeOpt machinery; it exists to reproduce the
    conservative, locally-stuck behavior of safe methods.
``random``
    Uniform lattice draw, seeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .domain import Domain, as_point
from .gp import GpModel
from .grid_eval import GridEvaluation, constrained_argmin, evaluate_grid

__all__ = [
    "BetaSchedule",
    "AlgorithmState",
    "Decision",
    "POLICIES",
    "config_step",
    "cei_step",
    "epbo_step",
    "primal_dual_step",
    "safeopt_lite_step",
    "random_step",
    "propose",
    "observe",
    "updated_duals",
]

POLICIES = ("config", "cei", "epbo", "primal_dual", "safeopt_lite", "random")

# Incumbent rule for constrained EI: an observed point counts as feasible
# when its posterior probability of satisfying all constraints is >= 1/2.
CEI_INCUMBENT_THRESHOLD = 0.5


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration weight schedule for the confidence bounds.

    ``constant`` uses ``value`` directly as ``beta_sqrt`` at every step.
    ``log_growth`` uses ``value * sqrt(2 log(grid_size * t^2 * pi^2 / (6 delta)))``,
    which is nonnegative and non-decreasing in ``t``.
    """

    mode: str = "constant"
    value: float = 2.0
    delta: float = 0.05

    def __post_init__(self):
        if self.mode not in ("constant", "log_growth"):
            raise ValueError(f"unknown beta mode {self.mode!r}")
        if self.value <= 0:
            raise ValueError(f"beta value must be positive, got {self.value}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def beta_sqrt(self, t: int, grid_size: int) -> float:
        if self.mode == "constant":
            return self.value
        t = max(int(t), 1)
        return self.value * np.sqrt(
            2.0 * np.log(grid_size * t**2 * np.pi**2 / (6.0 * self.delta))
        )


@dataclass(frozen=True)
class Decision:
    """Either the next sample location or a declaration that the problem is infeasible."""

    kind: str  # "sample" | "infeasible"
    point: np.ndarray | None = None
    index: int | None = None

    @classmethod
    def sample(cls, point: np.ndarray, index: int) -> "Decision":
        return cls(kind="sample", point=np.asarray(point, dtype=float), index=int(index))

    @classmethod
    def infeasible(cls) -> "Decision":
        return cls(kind="infeasible")

    @property
    def is_infeasible(self) -> bool:
        return self.kind == "infeasible"


@dataclass
class AlgorithmState:
    """Mutable per-run state: one GP per output plus policy bookkeeping.

    ``models[0]`` tracks the objective; ``models[i]`` tracks constraint ``i``.
    Stepping is strictly sequential within a run; independent runs share
    nothing mutable.
    """

    policy: str
    domain: Domain
    models: list[GpModel]
    beta: BetaSchedule = field(default_factory=BetaSchedule)
    t: int = 0
    rho: float = 1.0
    eta: float = 1.0
    duals: np.ndarray | None = None
    lipschitz: float = 1.0
    safe_indices: np.ndarray | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}, expected one of {POLICIES}")
        if not self.models:
            raise ValueError("need at least the objective model")
        for model in self.models:
            if model.kernel.dim != self.domain.dim:
                raise ValueError("model dimension does not match the domain")
        if self.duals is None:
            self.duals = np.zeros(self.n_constraints)
        self.duals = np.asarray(self.duals, dtype=float)
        if self.duals.shape != (self.n_constraints,):
            raise ValueError(f"need {self.n_constraints} duals, got shape {self.duals.shape}")
        if np.any(self.duals < 0):
            raise ValueError("dual variables must be nonnegative")
        if self.safe_indices is not None:
            self.safe_indices = np.unique(np.asarray(self.safe_indices, dtype=int))
            if self.safe_indices.size and (
                self.safe_indices[0] < 0 or self.safe_indices[-1] >= self.domain.grid_size
            ):
                raise ValueError("safe seed indices outside the grid")

    @property
    def n_constraints(self) -> int:
        return len(self.models) - 1

    def beta_vector(self) -> np.ndarray:
        """One beta_sqrt per output for the upcoming step."""
        value = self.beta.beta_sqrt(self.t + 1, self.domain.grid_size)
        return np.full(len(self.models), value)

    def grid_bounds(self) -> GridEvaluation:
        return evaluate_grid(self.models, self.beta_vector(), self.domain)


def config_step(state: AlgorithmState) -> Decision:
    """Optimistic constrained step: minimize LCB(objective) where all constraint LCBs <= 0.

    Declares infeasibility when some constraint's LCB is positive at every
    lattice point. If the jointly-LCB-feasible set is empty without any
    single constraint certifying infeasibility, falls back to the point with
    the smallest total positive-part constraint LCB.
    """
    _require_policy(state, "config")
    ev = state.grid_bounds()
    lcb = ev.lcb
    if state.n_constraints and np.max(np.min(lcb[1:], axis=1)) > 0:
        return Decision.infeasible()
    if state.n_constraints:
        mask = np.all(lcb[1:] <= 0, axis=0)
        idx = constrained_argmin(lcb[0], mask)
        if idx is None:
            violation = np.sum(np.maximum(lcb[1:], 0.0), axis=0)
            idx = constrained_argmin(violation)
    else:
        idx = constrained_argmin(lcb[0])
    return Decision.sample(ev.point(idx), idx)


def _feasibility_probability(ev: GridEvaluation) -> np.ndarray:
    """Product over constraints of P[g_i <= 0] under the posterior, per grid point."""
    prob = np.ones(ev.domain.grid_size)
    for i in range(1, ev.means.shape[0]):
        mean, sigma = ev.means[i], ev.sigmas[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = norm.cdf(np.where(sigma > 0, -mean / np.where(sigma > 0, sigma, 1.0), 0.0))
        p = np.where(sigma > 0, p, (mean <= 0).astype(float))
        prob *= p
    return prob


def cei_step(state: AlgorithmState) -> Decision:
    """Constrained expected improvement: EI times the feasibility probability.

    The incumbent is the best observed objective value among points whose
    current feasibility probability is at least 1/2; with no such point the
    step maximizes the feasibility probability alone. Never declares
    infeasibility.
    """
    _require_policy(state, "cei")
    objective = state.models[0]
    if objective.n_observations == 0:
        raise ValueError("cei needs at least one objective observation for the incumbent")
    ev = state.grid_bounds()
    feas_prob = _feasibility_probability(ev)

    incumbent = _cei_incumbent(state)
    if incumbent is None:
        idx = int(np.argmax(feas_prob))
        return Decision.sample(ev.point(idx), idx)

    mean, sigma = ev.means[0], ev.sigmas[0]
    improvement = incumbent - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = np.where(
        sigma > 0,
        improvement * norm.cdf(z) + sigma * norm.pdf(z),
        np.maximum(improvement, 0.0),
    )
    idx = int(np.argmax(ei * feas_prob))
    return Decision.sample(ev.point(idx), idx)


def _cei_incumbent(state: AlgorithmState) -> float | None:
    """Best objective observation at a point currently believed feasible."""
    objective = state.models[0]
    points = objective.points
    feasible = np.ones(points.shape[0], dtype=bool)
    for model in state.models[1:]:
        means, variances = model.posterior_batch(points)
        sigmas = np.sqrt(variances)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = norm.cdf(np.where(sigmas > 0, -means / np.where(sigmas > 0, sigmas, 1.0), 0.0))
        p = np.where(sigmas > 0, p, (means <= 0).astype(float))
        feasible &= p >= CEI_INCUMBENT_THRESHOLD
    if not np.any(feasible):
        return None
    return float(np.min(objective.values[feasible]))


def epbo_step(state: AlgorithmState) -> Decision:
    """Penalty step: minimize LCB(objective) + rho * sum of positive-part constraint LCBs."""
    _require_policy(state, "epbo")
    if state.rho < 0:
        raise ValueError(f"penalty rho must be nonnegative, got {state.rho}")
    ev = state.grid_bounds()
    lcb = ev.lcb
    score = lcb[0].copy()
    if state.n_constraints:
        score += state.rho * np.sum(np.maximum(lcb[1:], 0.0), axis=0)
    idx = constrained_argmin(score)
    return Decision.sample(ev.point(idx), idx)


def primal_dual_step(state: AlgorithmState) -> Decision:
    """Lagrangian step: minimize LCB(objective) + sum_i dual_i * LCB(constraint_i).

    The dual variables themselves are updated in :func:`observe` once the
    sampled point's constraint measurements are available.
    """
    _require_policy(state, "primal_dual")
    ev = state.grid_bounds()
    lcb = ev.lcb
    score = lcb[0].copy()
    if state.n_constraints:
        score += state.duals @ lcb[1:]
    idx = constrained_argmin(score)
    return Decision.sample(ev.point(idx), idx)


def updated_duals(duals: np.ndarray, constraint_values: np.ndarray, eta: float) -> np.ndarray:
    """Projected dual ascent: ``max(0, dual + eta * measured_value)`` per constraint."""
    if eta <= 0:
        raise ValueError(f"dual step size eta must be positive, got {eta}")
    return np.maximum(0.0, np.asarray(duals, dtype=float) + eta * np.asarray(constraint_values, dtype=float))


def safeopt_lite_step(state: AlgorithmState) -> Decision:
    """Safe step: expand the certified set by Lipschitz extrapolation, then sample in it.

    A lattice point joins the safe set when some already-safe point ``s``
    certifies it: ``ucb_i(s) + L * ||s - theta||_1 <= 0`` for every
    constraint ``i``. Within the safe set the step picks the smallest
    objective LCB, breaking ties by larger posterior sigma and then by
    smaller index. The safe set only grows and sampling never leaves it.
    """
    _require_policy(state, "safeopt_lite")
    if state.safe_indices is None or state.safe_indices.size == 0:
        raise ValueError("safeopt_lite requires a non-empty feasible seed set")
    if state.lipschitz < 0:
        raise ValueError(f"lipschitz constant must be nonnegative, got {state.lipschitz}")
    ev = state.grid_bounds()
    safe = state.safe_indices

    if state.n_constraints and np.isfinite(state.lipschitz):
        grid = state.domain.grid
        worst_ucb = np.max(ev.ucb[1:], axis=0)
        # L1 distances from each safe point to every lattice point.
        dist = np.sum(np.abs(grid[safe][:, None, :] - grid[None, :, :]), axis=-1)
        certified = np.min(worst_ucb[safe][:, None] + state.lipschitz * dist, axis=0) <= 0
        safe = np.union1d(safe, np.flatnonzero(certified))
    state.safe_indices = safe

    lcb0 = ev.lcb[0][safe]
    best = lcb0 == np.min(lcb0)
    sigma0 = ev.sigmas[0][safe]
    widest = sigma0 == np.max(sigma0[best])
    idx = int(safe[np.flatnonzero(best & widest)[0]])
    return Decision.sample(ev.point(idx), idx)


def random_step(state: AlgorithmState, rng_seed) -> Decision:
    """Uniform draw over the lattice, deterministic for a given seed."""
    _require_policy(state, "random")
    rng = np.random.default_rng(rng_seed)
    idx = state.domain.sample_index(rng)
    return Decision.sample(state.domain.point(idx), idx)


_STEPS = {
    "config": config_step,
    "cei": cei_step,
    "epbo": epbo_step,
    "primal_dual": primal_dual_step,
    "safeopt_lite": safeopt_lite_step,
}


def propose(state: AlgorithmState, rng_seed=None) -> Decision:
    """Dispatch to the state's policy step."""
    if state.policy == "random":
        if rng_seed is None:
            raise ValueError("random policy needs an rng_seed")
        return random_step(state, rng_seed)
    return _STEPS[state.policy](state)


def observe(state: AlgorithmState, theta, values) -> AlgorithmState:
    """Fold a full measurement vector ``(y_0 .. y_N)`` into the state.

    Every model gains the observation, the step counter advances, and
    policy-specific bookkeeping (primal-dual multipliers) is refreshed.
    """
    theta = as_point(theta)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != len(state.models):
        raise ValueError(f"expected {len(state.models)} outputs, got {values.shape[0]}")
    state.models = [model.add(theta, value) for model, value in zip(state.models, values)]
    state.t += 1
    if state.policy == "primal_dual" and state.n_constraints:
        state.duals = updated_duals(state.duals, values[1:], state.eta)
    return state


def _require_policy(state: AlgorithmState, expected: str):
    if state.policy != expected:
        raise ValueError(f"state.policy is {state.policy!r}, expected {expected!r}")
