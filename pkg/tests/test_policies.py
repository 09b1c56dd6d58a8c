import numpy as np
import pytest
from scipy.stats import norm

from cego.domain import Domain
from cego.gp import GpModel
from cego.kernels import Kernel
from cego.policies import (
    AlgorithmState,
    BetaSchedule,
    cei_step,
    config_step,
    epbo_step,
    observe,
    primal_dual_step,
    propose,
    random_step,
    safeopt_lite_step,
    updated_duals,
)


def make_state(policy, domain, n_constraints=1, beta=2.0, noise=1e-2, output_scale=1.0,
               lengthscale=1.0, **kwargs):
    kernel = Kernel("squared_exponential", [lengthscale] * domain.dim, output_scale)
    models = [GpModel(kernel, noise, output_index=i) for i in range(n_constraints + 1)]
    return AlgorithmState(
        policy=policy, domain=domain, models=models,
        beta=BetaSchedule(mode="constant", value=beta), **kwargs,
    )


def reference_config_decision(state):
    """Two-loop reimplementation of the optimistic constrained step (oracle)."""
    beta = state.beta.value
    n = state.domain.grid_size
    lcbs = np.empty((len(state.models), n))
    for i, model in enumerate(state.models):
        for idx in range(n):
            lcbs[i, idx] = model.lcb(state.domain.point(idx), beta)
    for i in range(1, len(state.models)):
        if np.min(lcbs[i]) > 0:
            return "infeasible", None
    best_idx, best_val = None, np.inf
    for idx in range(n):
        if all(lcbs[i, idx] <= 0 for i in range(1, len(state.models))):
            if lcbs[0, idx] < best_val:
                best_idx, best_val = idx, lcbs[0, idx]
    return "sample", best_idx


# -- config ------------------------------------------------------------------


def test_config_symmetric_prior_returns_first_grid_point():
    state = make_state("config", Domain([0.0, 0.0], [1.0, 1.0], [3, 3]))
    decision = config_step(state)
    assert decision.kind == "sample"
    assert decision.index == 0
    np.testing.assert_array_equal(decision.point, [0.0, 0.0])


def test_config_declares_infeasibility_from_trained_constraint():
    # Train the constraint model hard at every grid point of a tiny domain so
    # its lcb with a small beta is positive everywhere.
    domain = Domain([0.0], [1.0], [3])
    state = make_state("config", domain, beta=0.1, noise=1e-4)
    for idx in range(domain.grid_size):
        observe(state, domain.point(idx), [0.0, 10.0])
    decision = config_step(state)
    assert decision.is_infeasible


def test_config_respects_constraint_mask():
    rng = np.random.default_rng(31)
    domain = Domain([0.0], [1.0], [20])
    for _ in range(10):
        state = make_state("config", domain, noise=1e-3)
        for _ in range(int(rng.integers(1, 8))):
            theta = domain.point(int(rng.integers(domain.grid_size)))
            observe(state, theta, rng.normal(size=2))
        decision = config_step(state)
        if decision.is_infeasible:
            continue
        lcb_g = state.models[1].lcb(decision.point, state.beta.value)
        mask_nonempty = any(
            state.models[1].lcb(domain.point(i), state.beta.value) <= 0
            for i in range(domain.grid_size)
        )
        if mask_nonempty:
            assert lcb_g <= 1e-12


def test_config_matches_two_loop_reference():
    rng = np.random.default_rng(77)
    for trial in range(8):
        dim = int(rng.integers(1, 3))
        counts = rng.integers(3, 8, size=dim)
        domain = Domain([-1.0] * dim, [1.0] * dim, counts)
        state = make_state("config", domain, n_constraints=int(rng.integers(1, 3)),
                           noise=1e-3, lengthscale=0.8)
        for _ in range(int(rng.integers(0, 12))):
            theta = domain.point(int(rng.integers(domain.grid_size)))
            observe(state, theta, rng.normal(size=len(state.models)))
        kind_ref, idx_ref = reference_config_decision(state)
        decision = config_step(state)
        assert decision.kind == kind_ref
        if kind_ref == "sample" and idx_ref is not None:
            assert decision.index == idx_ref


def test_config_infeasible_iff_single_constraint_positive_everywhere():
    rng = np.random.default_rng(5)
    domain = Domain([0.0], [1.0], [15])
    for _ in range(10):
        state = make_state("config", domain, n_constraints=2, noise=1e-3)
        for _ in range(int(rng.integers(1, 10))):
            theta = domain.point(int(rng.integers(domain.grid_size)))
            observe(state, theta, rng.normal(loc=1.0, size=3))
        ev = state.grid_bounds()
        line2 = np.max(np.min(ev.lcb[1:], axis=1)) > 0
        assert config_step(state).is_infeasible == line2


# -- cei ----------------------------------------------------------------------


def test_cei_requires_objective_observation():
    state = make_state("cei", Domain([0.0], [1.0], [3]))
    with pytest.raises(ValueError):
        cei_step(state)


def test_cei_zero_variance_everywhere_ties_to_first_point():
    # Fully observed tiny grid with negligible noise: EI is ~0 everywhere.
    domain = Domain([0.0], [1.0], [3])
    state = make_state("cei", domain, n_constraints=0, noise=1e-12)
    for idx in range(domain.grid_size):
        observe(state, domain.point(idx), [1.0])
    decision = cei_step(state)
    assert decision.index == 0


def test_cei_reduces_to_ei_argmax_without_constraints():
    # Monte-Carlo oracle for expected improvement on a 5-point grid.
    domain = Domain([0.0], [2.0], [5])
    state = make_state("cei", domain, n_constraints=0, noise=1e-2, lengthscale=0.6)
    observe(state, domain.point(1), [0.3])
    observe(state, domain.point(3), [-0.4])

    model = state.models[0]
    incumbent = float(np.min(model.values))
    rng = np.random.default_rng(99)
    draws = rng.standard_normal(400_000)
    mc_ei = np.empty(domain.grid_size)
    for idx in range(domain.grid_size):
        mean, var = model.posterior(domain.point(idx))
        samples = mean + np.sqrt(var) * draws
        mc_ei[idx] = np.mean(np.maximum(incumbent - samples, 0.0))
        # closed form agrees with the Monte-Carlo estimate
        sigma = np.sqrt(var)
        z = (incumbent - mean) / sigma
        closed = (incumbent - mean) * norm.cdf(z) + sigma * norm.pdf(z)
        assert closed == pytest.approx(mc_ei[idx], abs=1e-3)

    assert cei_step(state).index == int(np.argmax(mc_ei))


def test_cei_prefers_probably_feasible_point():
    # Two extreme grid points, objective posterior symmetric about the middle
    # observation, constraint trained strongly negative at one end and
    # strongly positive at the other: equal EI, feasibility decides.
    domain = Domain([-1.0], [1.0], [3])
    state = make_state("cei", domain, noise=1e-4)
    observe(state, domain.point(1), [0.0, 0.0])
    for _ in range(5):
        state.models[1] = state.models[1].add([-1.0], -3.0).add([1.0], 3.0)

    ev_a = state.models[0].posterior([-1.0])
    ev_b = state.models[0].posterior([1.0])
    assert ev_a == pytest.approx(ev_b)  # symmetric EI by construction
    decision = cei_step(state)
    np.testing.assert_array_equal(decision.point, [-1.0])


def test_cei_falls_back_to_feasibility_maximization():
    # The only observed point is confidently infeasible: no incumbent exists,
    # so the step maximizes the feasibility probability instead.
    domain = Domain([-1.0], [1.0], [5])
    state = make_state("cei", domain, noise=1e-4, lengthscale=0.4)
    for _ in range(5):
        observe(state, domain.point(4), [0.0, 2.0])
    decision = cei_step(state)
    probs = []
    for idx in range(domain.grid_size):
        mean, var = state.models[1].posterior(domain.point(idx))
        probs.append(norm.cdf(-mean / np.sqrt(var)) if var > 0 else float(mean <= 0))
    assert decision.index == int(np.argmax(probs))


# -- epbo -----------------------------------------------------------------------


def test_epbo_zero_penalty_ignores_constraints():
    rng = np.random.default_rng(4)
    domain = Domain([0.0], [1.0], [10])
    state = make_state("epbo", domain, rho=0.0, noise=1e-3)
    for _ in range(5):
        observe(state, domain.point(int(rng.integers(10))), rng.normal(size=2))
    ev = state.grid_bounds()
    assert epbo_step(state).index == int(np.argmin(ev.lcb[0]))


def test_epbo_no_observations_ties_to_first_point():
    state = make_state("epbo", Domain([0.0, 0.0], [1.0, 1.0], [4, 4]), rho=1.0)
    assert epbo_step(state).index == 0


def test_epbo_large_penalty_recovers_config_choice():
    rng = np.random.default_rng(6)
    domain = Domain([0.0], [1.0], [25])
    matches = 0
    for _ in range(20):
        obs = [
            (domain.point(int(rng.integers(domain.grid_size))), rng.normal(size=2))
            for _ in range(int(rng.integers(1, 12)))
        ]
        epbo_state = make_state("epbo", domain, rho=1e6, noise=1e-3)
        config_state = make_state("config", domain, noise=1e-3)
        for theta, y in obs:
            observe(epbo_state, theta, y)
            observe(config_state, theta, y)
        config_decision = config_step(config_state)
        if config_decision.is_infeasible:
            continue
        ev = config_state.grid_bounds()
        if not np.any(np.all(ev.lcb[1:] <= 0, axis=0)):
            continue  # lcb-feasible set empty: limit equivalence not claimed
        epbo_decision = epbo_step(epbo_state)
        if np.all(ev.lcb[1:, epbo_decision.index] <= 0):
            assert epbo_decision.index == config_decision.index
            matches += 1
    assert matches >= 10  # the comparison must actually exercise the claim


# -- primal-dual -----------------------------------------------------------------


def test_primal_dual_zero_duals_is_unconstrained_argmin():
    rng = np.random.default_rng(8)
    domain = Domain([0.0], [1.0], [12])
    state = make_state("primal_dual", domain, noise=1e-3)
    for _ in range(6):
        observe(state, domain.point(int(rng.integers(12))), rng.normal(size=2))
    # observe() on a primal_dual state updates duals; reset them for the check
    state.duals = np.zeros(1)
    ev = state.grid_bounds()
    assert primal_dual_step(state).index == int(np.argmin(ev.lcb[0]))


def test_dual_update_clamps_at_zero():
    np.testing.assert_allclose(updated_duals(np.array([0.5]), np.array([-1.0]), 1.0), [0.0])


def test_dual_update_accumulates_violation():
    np.testing.assert_allclose(updated_duals(np.array([0.5]), np.array([0.2]), 1.0), [0.7])


def test_observe_updates_duals_for_primal_dual_policy():
    domain = Domain([0.0], [1.0], [5])
    state = make_state("primal_dual", domain, eta=2.0)
    observe(state, domain.point(0), [0.0, 0.3])
    np.testing.assert_allclose(state.duals, [0.6])
    observe(state, domain.point(1), [0.0, -1.0])
    np.testing.assert_allclose(state.duals, [0.0])


# -- safeopt-lite -------------------------------------------------------------------


def test_safeopt_requires_seed():
    state = make_state("safeopt_lite", Domain([0.0], [1.0], [5]))
    with pytest.raises(ValueError):
        safeopt_lite_step(state)


def test_safeopt_infinite_lipschitz_confines_to_seed():
    domain = Domain([0.0], [1.0], [6])
    state = make_state("safeopt_lite", domain, lipschitz=np.inf,
                       safe_indices=np.array([2, 3]))
    for _ in range(5):
        decision = safeopt_lite_step(state)
        assert decision.index in (2, 3)
        observe(state, decision.point, [0.0, -1.0])
    np.testing.assert_array_equal(state.safe_indices, [2, 3])


def test_safeopt_expansion_certificate():
    # One seed, strongly negative constraint there: points within
    # ucb(seed) + L*d <= 0 join the safe set, others stay out.
    domain = Domain([0.0], [10.0], [11])
    state = make_state("safeopt_lite", domain, lipschitz=1.0, noise=1e-6,
                       safe_indices=np.array([0]), lengthscale=0.5)
    for _ in range(8):
        observe(state, domain.point(0), [0.0, -3.0])
    safeopt_lite_step(state)
    ucb_seed = state.models[1].ucb(domain.point(0), state.beta.value)
    grid = domain.grid[:, 0]
    expected = set(np.flatnonzero(ucb_seed + 1.0 * np.abs(grid - grid[0]) <= 0)) | {0}
    assert set(state.safe_indices) == expected


def test_safeopt_never_samples_outside_safe_set():
    rng = np.random.default_rng(12)
    domain = Domain([0.0, 0.0], [1.0, 1.0], [5, 5])
    state = make_state("safeopt_lite", domain, lipschitz=2.0,
                       safe_indices=np.array([12]), lengthscale=0.5)
    for _ in range(10):
        before = set(state.safe_indices)
        decision = safeopt_lite_step(state)
        after = set(state.safe_indices)
        assert before <= after  # the safe set only grows
        assert decision.index in after
        observe(state, decision.point, rng.normal(size=2) - 1.0)


def test_safeopt_tie_break_prefers_wider_sigma():
    # Two safe points, identical objective lcb by symmetry, but one has been
    # sampled already (smaller sigma): the unsampled one wins.
    domain = Domain([-1.0], [1.0], [3])
    state = make_state("safeopt_lite", domain, safe_indices=np.array([0, 2]),
                       lipschitz=np.inf)
    observe(state, domain.point(1), [0.0, -1.0])  # symmetric midpoint evidence
    sig0 = state.models[0].posterior(domain.point(0))
    sig2 = state.models[0].posterior(domain.point(2))
    assert sig0 == pytest.approx(sig2)
    state.models[0] = state.models[0].add(domain.point(0), 0.0)
    decision = safeopt_lite_step(state)
    assert decision.index == 2


# -- random --------------------------------------------------------------------------


def test_random_deterministic_given_seed():
    domain = Domain([0.0, 0.0], [1.0, 1.0], [10, 10])
    state = make_state("random", domain)
    a = random_step(state, 1234)
    b = random_step(state, 1234)
    assert a.index == b.index


def test_random_single_point_grid():
    domain = Domain([0.0], [1.0], [2])
    state = make_state("random", domain)
    assert random_step(state, 7).index in (0, 1)


def test_random_uniform_frequencies():
    domain = Domain([0.0], [1.0], [4])
    state = make_state("random", domain)
    counts = np.zeros(4)
    n = 10_000
    for s in range(n):
        counts[random_step(state, s).index] += 1
    freqs = counts / n
    tol = 3 * np.sqrt(0.25 * 0.75 / n)
    np.testing.assert_allclose(freqs, 0.25, atol=tol)


def test_propose_dispatch_and_seed_requirement():
    domain = Domain([0.0], [1.0], [4])
    state = make_state("random", domain)
    with pytest.raises(ValueError):
        propose(state)
    assert propose(state, rng_seed=3).kind == "sample"
    config_state = make_state("config", domain)
    assert propose(config_state).kind == "sample"


# -- shared machinery ---------------------------------------------------------------


def test_observe_increments_t_and_grows_models():
    domain = Domain([0.0], [1.0], [4])
    state = make_state("config", domain)
    observe(state, domain.point(2), [1.0, -0.5])
    assert state.t == 1
    assert all(m.n_observations == 1 for m in state.models)


def test_beta_schedule_log_growth_monotone():
    sched = BetaSchedule(mode="log_growth", value=1.0, delta=0.05)
    values = [sched.beta_sqrt(t, grid_size=100) for t in range(1, 30)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert all(v >= 0 for v in values)


def test_beta_schedule_validation():
    with pytest.raises(ValueError):
        BetaSchedule(mode="weird")
    with pytest.raises(ValueError):
        BetaSchedule(delta=1.5)


def test_policies_deterministic_replay():
    # Identical seeds and observation sequences yield identical decisions.
    domain = Domain([0.0, 0.0], [2.0, 2.0], [6, 6])
    rng_values = np.random.default_rng(55).normal(size=(5, 2))
    sequences = []
    for _ in range(2):
        state = make_state("config", domain, noise=1e-3)
        seq = []
        for values in rng_values:
            decision = propose(state)
            seq.append(decision.index)
            observe(state, decision.point, values)
        sequences.append(seq)
    assert sequences[0] == sequences[1]
