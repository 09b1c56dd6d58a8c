"""Experiment orchestration: seeded replications, JSONL logs, resume, metrics tables.

Reproducibility contract: a run configuration determines every byte of its
logs. All randomness is drawn from named streams derived from the
replication seed (start sampling, per-step measurement noise, per-step
random-policy draws), so a replication can be resumed after truncation and
will reproduce the original prefix exactly. Wall-clock timestamps live in a
sidecar file, never in the log itself.

Log layout: one JSONL file per (policy, seed). The first line is a header
object carrying the full effective configuration; every further line is a
step record ``{"t", "theta", "y", "true", "decision"}``.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .domain import Domain
from .gp import GpModel
from .hyperfit import fit_hyperparameters
from .kernels import SQUARED_EXPONENTIAL, Kernel
from .metrics import (
    RunRecord,
    best_so_far_series,
    normalized_regret_violation,
    regret_contribution,
)
from .policies import AlgorithmState, BetaSchedule, observe, propose
from .problems import Problem, problem_from_config

__all__ = [
    "RunConfig",
    "run_experiment",
    "run_replication",
    "feasible_start_sampler",
    "emit_metrics",
    "load_log",
    "log_path",
    "FeasibleStartError",
]

LOG_DIR_ENV = "CEGO_LOG_DIR"

# Stream tags separating the independent RNG streams of one replication.
_STREAM_START = 101
_STREAM_NOISE = 202
_STREAM_POLICY = 303

MAX_START_REJECTIONS = 100_000


class FeasibleStartError(RuntimeError):
    """Rejection sampling failed to find a feasible starting point."""


@dataclass
class RunConfig:
    """One experiment grid: a problem, a set of policies, and replication seeds."""

    problem: dict
    policies: list[dict]
    budget: int
    seeds: list[int]
    output_dir: str = "runs"
    start: str = "feasible"  # "feasible" | "uniform" | "none"
    n_init_random: int = 0
    gp: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("replication seeds must be distinct")
        if not self.seeds:
            raise ValueError("need at least one replication seed")
        if self.start not in ("feasible", "uniform", "none"):
            raise ValueError(f"unknown start mode {self.start!r}")
        if self.n_init_random < 0:
            raise ValueError("n_init_random must be nonnegative")
        labels = [policy_label(p) for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"policy labels must be unique, got {labels}")
        # Fail fast on unknown problems/policies.
        problem_from_config(self.problem)
        for spec in self.policies:
            if "name" not in spec:
                raise ValueError(f"policy spec needs a 'name': {spec}")

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(**raw)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "policies": self.policies,
            "budget": self.budget,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "start": self.start,
            "n_init_random": self.n_init_random,
            "gp": self.gp,
        }


def policy_label(spec: dict) -> str:
    return spec.get("label", spec["name"])


def _stream(seed: int, tag: int, step: int | None = None):
    key = [int(seed), tag] if step is None else [int(seed), tag, int(step)]
    return np.random.default_rng(key)


# -- state construction ------------------------------------------------------------


def _default_lengthscales(domain: Domain, factor: float) -> tuple[float, ...]:
    widths = np.asarray(domain.upper) - np.asarray(domain.lower)
    return tuple(factor * widths)


def _per_output(value, n_outputs: int) -> list:
    """Broadcast a scalar GP setting or pass through one value per output."""
    if isinstance(value, (list, tuple)):
        if len(value) != n_outputs:
            raise ValueError(f"expected {n_outputs} per-output values, got {len(value)}")
        return list(value)
    return [value] * n_outputs


def build_state(problem: Problem, policy_spec: dict, gp_config: dict) -> AlgorithmState:
    """Fresh algorithm state for one replication.

    ``output_scale`` and ``noise_variance`` accept either a scalar or one
    value per output, since objective and constraints often live on very
    different scales.
    """
    family = gp_config.get("family", SQUARED_EXPONENTIAL)
    if "lengthscales" in gp_config:
        raw = gp_config["lengthscales"]
        lengthscales = tuple(np.broadcast_to(np.asarray(raw, dtype=float), (problem.domain.dim,)))
    else:
        lengthscales = _default_lengthscales(
            problem.domain, gp_config.get("lengthscale_factor", 0.1)
        )
    output_scales = _per_output(gp_config.get("output_scale", 1.0), problem.n_outputs)
    noise_variances = _per_output(gp_config.get("noise_variance", 1e-4), problem.n_outputs)
    models = [
        GpModel(Kernel(family, lengthscales, output_scales[i]), noise_variances[i], output_index=i)
        for i in range(problem.n_outputs)
    ]
    beta_cfg = policy_spec.get("beta", {})
    beta = BetaSchedule(
        mode=beta_cfg.get("mode", "constant"),
        value=beta_cfg.get("value", 2.0),
        delta=beta_cfg.get("delta", 0.05),
    )
    safe_indices = None
    if policy_spec["name"] == "safeopt_lite" and "safe_seed" in policy_spec:
        safe_indices = [
            problem.domain.nearest_index(point) for point in policy_spec["safe_seed"]
        ]
    return AlgorithmState(
        policy=policy_spec["name"],
        domain=problem.domain,
        models=models,
        beta=beta,
        rho=policy_spec.get("rho", 1.0),
        eta=policy_spec.get("eta", 1.0),
        lipschitz=policy_spec.get("lipschitz", 1.0),
        safe_indices=safe_indices,
    )


def feasible_start_sampler(problem: Problem, seed: int) -> np.ndarray:
    """Uniformly draw lattice points until the true constraints are all satisfied."""
    rng = _stream(seed, _STREAM_START)
    return _feasible_start(problem, rng)


def _feasible_start(problem: Problem, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_START_REJECTIONS):
        point = problem.domain.point(problem.domain.sample_index(rng))
        values = problem.evaluate(point)
        if np.all(values[1:] <= 0):
            return point
    raise FeasibleStartError(
        f"no feasible lattice point found for {problem.name} "
        f"after {MAX_START_REJECTIONS} rejections"
    )


def _initial_points(problem: Problem, config: RunConfig, seed: int) -> list[np.ndarray]:
    rng = _stream(seed, _STREAM_START)
    points: list[np.ndarray] = []
    if config.start == "feasible":
        points.append(_feasible_start(problem, rng))
    elif config.start == "uniform":
        points.append(problem.domain.point(problem.domain.sample_index(rng)))
    for _ in range(config.n_init_random):
        points.append(problem.domain.point(problem.domain.sample_index(rng)))
    return points


# -- log I/O -----------------------------------------------------------------------


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _record_dict(t: int, decision_kind: str, theta, y, true) -> dict:
    return {
        "t": t,
        "theta": None if theta is None else [float(v) for v in theta],
        "y": None if y is None else [float(v) for v in y],
        "true": None if true is None else [float(v) for v in true],
        "decision": decision_kind,
    }


def log_path(config: RunConfig, policy_spec: dict, seed: int) -> Path:
    out_dir = Path(os.environ.get(LOG_DIR_ENV, config.output_dir))
    name = f"{config.problem['name']}__{policy_label(policy_spec)}__seed{seed}.jsonl"
    return out_dir / name


def _header(config: RunConfig, policy_spec: dict, seed: int) -> dict:
    return {
        "kind": "run_header",
        "schema": 1,
        "version": __version__,
        "problem": config.problem,
        "policy": policy_spec,
        "budget": config.budget,
        "seed": seed,
        "start": config.start,
        "n_init_random": config.n_init_random,
        "gp": config.gp,
    }


def load_log(path) -> tuple[dict, list[RunRecord]]:
    """Parse a log file into its header and complete records.

    A trailing line without a newline (truncated write) is ignored.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] != "":
        lines = lines[:-1]  # drop incomplete trailing line
    else:
        lines = lines[:-1] if lines else []
    if not lines:
        raise ValueError(f"log {path} has no header line")
    header = json.loads(lines[0])
    if header.get("kind") != "run_header":
        raise ValueError(f"log {path} does not start with a run header")
    records = []
    for line in lines[1:]:
        raw = json.loads(line)
        records.append(
            RunRecord(
                t=raw["t"],
                theta=None if raw["theta"] is None else tuple(raw["theta"]),
                y=None if raw["y"] is None else tuple(raw["y"]),
                true_values=None if raw["true"] is None else tuple(raw["true"]),
                decision=raw["decision"],
                policy=header["policy"]["name"],
                seed=header["seed"],
            )
        )
    return header, records


def _truncate_partial_line(path: Path):
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n")
        path.write_bytes(data[: cut + 1] if cut >= 0 else b"")


# -- replication loop ---------------------------------------------------------------


def run_replication(config: RunConfig, policy_spec: dict, seed: int) -> Path:
    """Run (or resume) one (policy, seed) replication; returns the log path."""
    problem = problem_from_config(config.problem)
    path = log_path(config, policy_spec, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _header(config, policy_spec, seed)

    existing: list[RunRecord] = []
    if path.exists() and path.stat().st_size > 0:
        _truncate_partial_line(path)
        try:
            old_header, existing = load_log(path)
        except (ValueError, json.JSONDecodeError) as exc:
            raise RuntimeError(f"cannot resume {path}: {exc}") from exc
        if old_header != header:
            raise RuntimeError(
                f"existing log {path} was produced by a different configuration; "
                "move it aside or change output_dir"
            )
    else:
        path.write_text(_dumps(header) + "\n", encoding="utf-8")

    done = bool(existing) and (
        existing[-1].decision == "infeasible" or len(existing) >= config.budget
    )

    started = time.time()
    if not done:
        _advance_replication(config, policy_spec, seed, problem, path, existing)
    meta = {
        "log": path.name,
        "resumed_at_step": len(existing),
        "started_at": started,
        "finished_at": time.time(),
    }
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return path


def _advance_replication(
    config: RunConfig,
    policy_spec: dict,
    seed: int,
    problem: Problem,
    path: Path,
    existing: list[RunRecord],
):
    if policy_spec["name"] == "safeopt_lite" and "safe_seed" not in policy_spec:
        if config.start != "feasible":
            raise ValueError(
                "safeopt_lite needs an explicit safe_seed unless start='feasible'"
            )
        policy_spec = dict(policy_spec)
        policy_spec["safe_seed"] = [
            [float(v) for v in feasible_start_sampler(problem, seed)]
        ]

    state = build_state(problem, policy_spec, config.gp)
    init_points = _initial_points(problem, config, seed)
    n_init = min(len(init_points), config.budget)
    fit_every = int(config.gp.get("fit_every", 0))

    def replay(record: RunRecord, expect_proposal: bool):
        if record.decision == "infeasible":
            raise AssertionError("infeasible records terminate a log")
        if expect_proposal:
            decision = propose(state, rng_seed=_policy_seed(seed, record.t))
            if decision.is_infeasible or list(decision.point) != list(record.theta):
                raise RuntimeError(
                    f"resume mismatch at t={record.t} in {path}: the configuration "
                    "or code no longer reproduces the logged decision"
                )
        observe(state, np.asarray(record.theta), np.asarray(record.y))
        _maybe_refit(state, fit_every)

    for record in existing:
        replay(record, expect_proposal=record.t > n_init)
    t = len(existing)

    with open(path, "a", encoding="utf-8") as fh:
        while t < config.budget:
            if t < n_init:
                theta = init_points[t]
                decision_kind = "sample"
            else:
                decision = propose(state, rng_seed=_policy_seed(seed, t + 1))
                if decision.is_infeasible:
                    fh.write(_dumps(_record_dict(t + 1, "infeasible", None, None, None)) + "\n")
                    fh.flush()
                    return
                theta = decision.point
                decision_kind = "sample"
            noise_rng = _stream(seed, _STREAM_NOISE, t + 1)
            y, true = problem.evaluate_noisy(theta, noise_rng)
            true_field = true if problem.pure else None
            observe(state, theta, y)
            _maybe_refit(state, fit_every)
            t += 1
            fh.write(_dumps(_record_dict(t, decision_kind, theta, y, true_field)) + "\n")
            fh.flush()


def _policy_seed(seed: int, step: int):
    return [int(seed), _STREAM_POLICY, int(step)]


def _maybe_refit(state: AlgorithmState, fit_every: int):
    if fit_every <= 0 or state.t < 4 or state.t % fit_every:
        return
    new_models = []
    for model in state.models:
        kernel, noise = fit_hyperparameters(
            model.points, model.values, state.domain, family=model.kernel.family
        )
        new_models.append(
            GpModel(kernel, noise, model.output_index, model.points, model.values)
        )
    state.models = new_models


def run_experiment(config: RunConfig, jobs: int = 1) -> list[Path]:
    """Execute every (policy, seed) replication; returns the log paths.

    Replications are independent; with ``jobs > 1`` they run in separate
    processes. A failed replication (e.g. external evaluator fault) does not
    abort the others; its partial log is preserved and the error re-raised
    at the end.
    """
    tasks = [(spec, seed) for spec in config.policies for seed in config.seeds]
    paths: list[Path] = []
    failures: list[tuple[dict, int, Exception]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(run_replication, config, spec, seed): (spec, seed)
                for spec, seed in tasks
            }
            for future, (spec, seed) in futures.items():
                try:
                    paths.append(future.result())
                except Exception as exc:  # noqa: BLE001 - collected and re-raised
                    failures.append((spec, seed, exc))
    else:
        for spec, seed in tasks:
            try:
                paths.append(run_replication(config, spec, seed))
            except Exception as exc:  # noqa: BLE001
                failures.append((spec, seed, exc))
    if failures:
        spec, seed, exc = failures[0]
        raise RuntimeError(
            f"{len(failures)} replication(s) failed; first: "
            f"policy={policy_label(spec)} seed={seed}: {exc}"
        ) from exc
    return paths


# -- metric tables -------------------------------------------------------------------


def _series_for(records: list[RunRecord], metric: str, j_star, sigmas) -> np.ndarray:
    if metric == "constrained_regret":
        if j_star is None:
            raise ValueError("constrained_regret needs a reference optimum j_star")
        return best_so_far_series(records, lambda r: regret_contribution(r, j_star))
    if metric == "normalized":
        if sigmas is None:
            raise ValueError("normalized metric needs per-output sigmas")
        return best_so_far_series(
            records, lambda r: normalized_regret_violation(r, j_star, sigmas)
        )
    if metric == "best_so_far":
        return best_so_far_series(records, lambda r: float(r.outputs()[0]))
    raise ValueError(f"unknown metric {metric!r}")


def emit_metrics(
    log_paths: list,
    metric: str = "constrained_regret",
    j_star: float | None = None,
    sigmas=None,
    out=None,
) -> list[list]:
    """Aggregate per-policy metric series into a CSV-shaped table.

    One row per step: ``step, <label>_mean, <label>_std, ...`` with the
    sample standard deviation (n-1 denominator; 0.0 for a single
    replication). Runs that stopped early (infeasibility declarations) are
    padded with their last value so every row aggregates the same
    replications.
    """
    by_label: dict[str, list[np.ndarray]] = {}
    budget = 0
    for path in log_paths:
        header, records = load_log(path)
        label = policy_label(header["policy"])
        series = _series_for(records, metric, j_star, sigmas)
        if series.size == 0:
            raise ValueError(f"log {path} has no sampled records to aggregate")
        budget = max(budget, header["budget"])
        by_label.setdefault(label, []).append(series)

    labels = sorted(by_label)
    table: list[list] = [["step"] + [f"{lab}_{s}" for lab in labels for s in ("mean", "std")]]
    padded = {
        lab: np.stack([
            np.concatenate([s, np.full(budget - s.size, s[-1])]) for s in series_list
        ])
        for lab, series_list in by_label.items()
    }
    for step in range(budget):
        row: list = [step + 1]
        for lab in labels:
            column = padded[lab][:, step]
            mean = float(np.mean(column))
            std = float(np.std(column, ddof=1)) if column.size > 1 else 0.0
            row.extend([mean, std])
        table.append(row)

    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh).writerows(table)
    return table
