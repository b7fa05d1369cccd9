"""Seeded Monte-Carlo experiments and their CSV/JSON reports.

Configuration files are JSON with four top-level objects (``instance``,
``task``, ``algorithm``, ``experiment``); the schema ships as
``config.schema.json`` next to this module.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from . import caet
from .errors import InfeasibleTask, InvalidArgument, SolverFailure
from .exp_family import RewardFamily, binary_kl
from .oracle import OracleResult, bai_gap_characteristic, solve_optimal, three_arm_closed_form
from .sim import (
    GAP_ESTIMATE,
    CostModel,
    Instance,
    make_rng,
    true_gap_costs,
)
from .task import PairwiseTask, TaskKind, classify, make_task

DEFAULT_DELTAS = (1e-2, 1e-3, 1e-4, 1e-6, 1e-8)

TRIAL_COLUMNS = (
    "delta", "runs", "mean_cost", "std_cost", "mean_tau", "error_rate",
    "err_ci_low", "err_ci_high", "t_star", "lower_bound", "upper_band", "capped_runs",
)
REGRET_COLUMNS = (
    "horizon", "runs", "mean_regret", "std_regret", "mean_commit_time",
    "commit_correct_fraction", "stopped_fraction", "mean_exploration_regret",
    "mean_commit_regret", "t_star_gap", "bound",
)
INT_COLUMNS = {"runs", "capped_runs", "horizon"}


@dataclass
class ExperimentSpec:
    instance: Instance
    task: PairwiseTask
    algorithm: dict = field(default_factory=dict)
    delta_grid: tuple = DEFAULT_DELTAS
    runs_per_delta: int = 100
    seed: int = 0
    horizons: tuple = ()
    output: str | None = None

    def __post_init__(self):
        grid = tuple(float(d) for d in self.delta_grid)
        if not grid or any(not 0 < d < 1 for d in grid):
            raise InvalidArgument("delta_grid entries must lie in (0, 1)")
        if any(a <= b for a, b in zip(grid, grid[1:])):
            raise InvalidArgument("delta_grid must be strictly decreasing")
        if self.runs_per_delta < 1:
            raise InvalidArgument("runs_per_delta must be at least 1")
        if self.instance.K != self.task.K:
            raise InvalidArgument("instance and task disagree on the number of arms")
        self.delta_grid = grid
        self.horizons = tuple(int(h) for h in self.horizons)

    def config(self, delta: float, **overrides) -> caet.Config:
        return caet.Config(delta=delta, **{**self.algorithm, **overrides})


@dataclass
class Summary:
    """Report rows plus free-form metadata; ``columns`` fixes the CSV layout."""

    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)


# -- configuration -----------------------------------------------------------


def config_schema() -> dict:
    text = resources.files("caetlab").joinpath("config.schema.json").read_text()
    return json.loads(text)


def instance_from_dict(d: dict) -> Instance:
    family = (
        RewardFamily.bernoulli()
        if d.get("family", "gaussian") == "bernoulli"
        else RewardFamily.gaussian(d.get("sigma", 1.0))
    )
    mu = tuple(float(x) for x in d["mu"])
    cm = d.get("cost_model", {"kind": "deterministic", "c": [1.0] * len(mu)})
    kind = cm["kind"]
    if kind == "gap":
        probe = Instance(mu, family, CostModel.gap_estimate())
        model = CostModel.deterministic(true_gap_costs(probe))
    elif kind == "deterministic":
        model = CostModel.deterministic(cm["c"])
    elif kind == "bernoulli":
        model = CostModel.bernoulli(cm["c"])
    elif kind == "gaussian":
        model = CostModel.gaussian(cm["c"], cm["sigma_c"])
    elif kind == GAP_ESTIMATE:
        model = CostModel.gap_estimate()
    else:
        raise InvalidArgument(f"unknown cost model {kind!r}")
    return Instance(mu, family, model)


def algorithm_from_dict(d: dict) -> dict:
    out = {k: d[k] for k in ("r", "r_prime", "gamma0", "sampler", "max_steps", "resolve_every", "solver") if k in d}
    thr = d.get("threshold")
    if thr is not None:
        out["threshold"] = thr["kind"]
        for k in ("theta", "C"):
            if k in thr:
                out[k] = thr[k]
    return out


def spec_from_dict(d: dict) -> ExperimentSpec:
    import jsonschema

    jsonschema.validate(d, config_schema())
    t = d["task"]
    exp = d.get("experiment", {})
    return ExperimentSpec(
        instance=instance_from_dict(d["instance"]),
        task=make_task(t["kind"], t["K"], t.get("m")),
        algorithm=algorithm_from_dict(d.get("algorithm", {})),
        delta_grid=tuple(exp.get("delta_grid", DEFAULT_DELTAS)),
        runs_per_delta=int(exp.get("runs_per_delta", 100)),
        seed=int(exp.get("seed", 0)),
        horizons=tuple(exp.get("horizons", ())),
        output=exp.get("output"),
    )


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


# -- statistics ---------------------------------------------------------------


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2.0)
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _qualifies_for_closed_form(instance: Instance, task: PairwiseTask) -> bool:
    fam = instance.family
    if task.kind is not TaskKind.RANKING or task.K != 3 or not fam.is_gaussian or fam.sigma != 1.0:
        return False
    if len(set(instance.mu)) < 3:
        return False
    gaps = true_gap_costs(instance)
    return np.allclose(instance.expected_costs(), gaps, rtol=0, atol=1e-12)


def characteristic_time(instance: Instance, task: PairwiseTask) -> tuple[float, str, np.ndarray]:
    """``(T*, source, u*)`` on the true instance; closed form when it applies."""
    if _qualifies_for_closed_form(instance, task):
        order = classify(task, instance.mu)
        gaps = true_gap_costs(instance)
        u_sorted, inv = three_arm_closed_form(gaps[order[1]], gaps[order[2]])
        u = np.zeros(3)
        u[list(order)] = u_sorted
        return 1.0 / inv, "closed_form", u
    try:
        res = solve_optimal(task, instance.family, instance.expected_costs(), instance.mu)
    except SolverFailure as err:
        res = err.best
    except InfeasibleTask as err:
        raise InvalidArgument(f"true instance is infeasible for this task: {err}") from err
    return res.t_star, "solver", res.u_star


# -- experiments --------------------------------------------------------------


def _trial(instance, task, config, seed, keys):
    res = caet.run(instance, task, config, rng=make_rng(seed, *keys))
    return res.tau, res.cumulative_cost, res.correct, res.capped, res.counts


def _trial_traced(instance, task, config, seed, keys, trace):
    res = caet.run(instance, task, config, rng=make_rng(seed, *keys), trace=trace)
    return res.tau, res.cumulative_cost, res.correct, res.capped, res.counts


def _map(fn, jobs: int, argsets):
    if jobs == 1:
        return [fn(*args) for args in argsets]
    return Parallel(n_jobs=jobs)(delayed(fn)(*args) for args in argsets)


def run_trials(spec: ExperimentSpec, jobs: int = 1, trace=None) -> Summary:
    """Seeded runs at every confidence level of the grid.

    Run ``j`` at grid index ``i`` draws from the stream ``(seed, i, j)``;
    results are aggregated in run order so the summary does not depend on
    ``jobs``. Besides the CSV columns each row carries ``lower_bound_kl``
    (``T* kl(delta, 1 - delta)``), ``alpha`` and ``mean_scaled_counts``
    (per-arm ``N_a(tau) / ((1 - alpha) tau)``).
    """
    t_star, source, u_star = characteristic_time(spec.instance, spec.task)
    rows = []
    for i, delta in enumerate(spec.delta_grid):
        config = spec.config(delta)
        argsets = [(spec.instance, spec.task, config, spec.seed, (i, j)) for j in range(spec.runs_per_delta)]
        if trace is not None:
            outs = [_trial_traced(*args, trace) for args in argsets]
        else:
            outs = _map(_trial, jobs, argsets)
        taus = np.array([o[0] for o in outs], dtype=float)
        costs = np.array([o[1] for o in outs], dtype=float)
        errors = sum(1 for o in outs if not o[2])
        counts = np.array([o[4] for o in outs], dtype=float)
        n = len(outs)
        lo, hi = wilson_interval(errors, n)
        theta = config.theta if config.threshold == caet.DEVIATIONAL else 1.0
        scale = (1.0 - config.alpha) * taus[:, None]
        rows.append({
            "delta": delta,
            "runs": n,
            "mean_cost": float(costs.mean()),
            "std_cost": float(costs.std(ddof=1)) if n > 1 else 0.0,
            "mean_tau": float(taus.mean()),
            "error_rate": errors / n,
            "err_ci_low": lo,
            "err_ci_high": hi,
            "t_star": t_star,
            "lower_bound": t_star * math.log(1.0 / (2.4 * delta)),
            "upper_band": theta * t_star * math.log(1.0 / delta),
            "capped_runs": sum(1 for o in outs if o[3]),
            "lower_bound_kl": t_star * binary_kl(delta, 1.0 - delta),
            "alpha": config.alpha,
            "mean_scaled_counts": [float(x) for x in (counts / scale).mean(axis=0)] if config.alpha < 1 else None,
        })
    meta = {
        "experiment": "explore",
        "instance": {"mu": list(spec.instance.mu), "family": spec.instance.family.kind,
                     "sigma": spec.instance.family.sigma, "cost_model": spec.instance.cost_model.to_dict()},
        "task": spec.task.to_dict(),
        "algorithm": spec.algorithm,
        "seed": spec.seed,
        "t_star": t_star,
        "t_star_source": source,
        "u_star": [float(x) for x in u_star],
    }
    return Summary(TRIAL_COLUMNS, rows, meta)


def _etc_trial(instance, task, config, horizon, seed, keys):
    res = caet.run(instance, task, config, rng=make_rng(seed, *keys))
    gaps = true_gap_costs(instance)
    explore = float(sum(g * n for g, n in zip(gaps, res.counts)))
    if res.capped:
        return explore, 0.0, res.tau, False, False
    commit = (horizon - res.tau) * gaps[res.decision]
    return explore, commit, res.tau, True, res.correct


def run_etc_regret(spec: ExperimentSpec, horizons=None, runs: int | None = None, jobs: int = 1) -> Summary:
    """Explore-then-commit regret: identify the best arm at delta = 1/T, then commit.

    Runs that have not stopped by the horizon spend it all exploring and
    count as not committed.
    """
    horizons = tuple(int(h) for h in (horizons or spec.horizons))
    runs = runs or spec.runs_per_delta
    if spec.task.kind is not TaskKind.BEST_ARM:
        raise InvalidArgument("regret mode needs the best_arm task")
    if not horizons or min(horizons) < spec.task.K:
        raise InvalidArgument("every horizon must be at least K")
    t_gap = bai_gap_characteristic(spec.instance.family, spec.instance.mu)
    rows = []
    for i, horizon in enumerate(horizons):
        config = spec.config(1.0 / horizon, max_steps=horizon)
        argsets = [(spec.instance, spec.task, config, horizon, spec.seed, (i, j)) for j in range(runs)]
        outs = _map(_etc_trial, jobs, argsets)
        explore = np.array([o[0] for o in outs])
        commit = np.array([o[1] for o in outs])
        regret = explore + commit
        theta = config.theta if config.threshold == caet.DEVIATIONAL else 1.0
        rows.append({
            "horizon": horizon,
            "runs": runs,
            "mean_regret": float(regret.mean()),
            "std_regret": float(regret.std(ddof=1)) if runs > 1 else 0.0,
            "mean_commit_time": float(np.mean([o[2] for o in outs])),
            "commit_correct_fraction": sum(1 for o in outs if o[4]) / runs,
            "stopped_fraction": sum(1 for o in outs if o[3]) / runs,
            "mean_exploration_regret": float(explore.mean()),
            "mean_commit_regret": float(commit.mean()),
            "t_star_gap": t_gap,
            "bound": theta * t_gap * math.log(horizon),
        })
    meta = {
        "experiment": "regret",
        "instance": {"mu": list(spec.instance.mu), "family": spec.instance.family.kind,
                     "sigma": spec.instance.family.sigma, "cost_model": spec.instance.cost_model.to_dict()},
        "algorithm": spec.algorithm,
        "seed": spec.seed,
        "t_star_gap": t_gap,
    }
    return Summary(REGRET_COLUMNS, rows, meta)


def oracle_report(spec: ExperimentSpec) -> dict:
    inst = spec.instance
    try:
        res = solve_optimal(spec.task, inst.family, inst.expected_costs(), inst.mu)
    except SolverFailure as err:
        res: OracleResult = err.best
    return res.to_dict()


# -- reports ------------------------------------------------------------------


def _fmt(column: str, value) -> str:
    if column in INT_COLUMNS:
        return str(int(value))
    return f"{float(value):.9g}"


def format_csv(summary: Summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(summary.columns)
    for row in summary.rows:
        writer.writerow([_fmt(c, row[c]) for c in summary.columns])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float):
        return float(f"{value:.9g}") if math.isfinite(value) else None
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


def format_json(summary: Summary) -> str:
    doc = {"columns": list(summary.columns), "rows": _json_value(summary.rows), "meta": _json_value(summary.meta)}
    return json.dumps(doc, indent=2) + "\n"


def emit_report(summary: Summary, path, fmt: str = "csv") -> Path:
    if fmt not in ("csv", "json"):
        raise InvalidArgument(f"unknown report format {fmt!r}")
    text = format_csv(summary) if fmt == "csv" else format_json(summary)
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise OSError(f"cannot write report to {path}: {err}") from err
    return path


def read_csv_report(path) -> Summary:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = tuple(next(reader))
        rows = [
            {c: int(v) if c in INT_COLUMNS else float(v) for c, v in zip(columns, line)}
            for line in reader
        ]
    return Summary(columns, rows)
