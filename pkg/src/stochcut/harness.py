"""Policy simulation, re-evaluation of trained runs, and discount sweeps.

Replication ``r`` draws its initial state and demands from
``RngStream(seed).spawn(r, 0)`` and the policy's own randomness from
``spawn(r, 1)``, so every policy faces the same demand sequence.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dynamics
from .baselines import GreedyPolicy, Policy
from .cem import CemConfig
from .instance import ProblemInstance
from .rng import RngStream
from .trainer import TrainConfig, TrainRun, train

log = logging.getLogger(__name__)

BOOTSTRAP_STREAM = "bootstrap"

COSTS_COLUMNS = ["replication", "step", "cost", "rolling_mean"]
SUMMARY_COLUMNS = ["policy", "mean", "ci_lo", "ci_hi"]
INVENTORY_COLUMNS = ["step", "item", "initial", "available", "demand"]
SWEEP_COLUMNS = ["gamma", "mean", "ci_lo", "ci_hi"]

DEFAULT_GAMMAS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


@dataclass(frozen=True)
class EvalConfig:
    replications: int = 10
    horizon: int = 200
    seed: int = 0
    bootstrap_resamples: int = 1000
    confidence: float = 0.95
    gamma: float = 0.8  # only for the logged discounted return
    traces: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1 or self.horizon < 1:
            raise ValueError("replications and horizon must be at least 1")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if self.bootstrap_resamples < 1:
            raise ValueError("bootstrap_resamples must be at least 1")


@dataclass
class Trace:
    states: np.ndarray  # (horizon, m) initial inventory
    decisions: np.ndarray  # (horizon, n)
    available: np.ndarray  # (horizon, m) post-decision inventory
    demands: np.ndarray  # (horizon, m)
    next_states: np.ndarray  # (horizon, m)


@dataclass
class EvalReport:
    policy: str
    costs: np.ndarray  # (replications, horizon) per-step costs
    replication_means: np.ndarray
    discounted: np.ndarray
    mean: float
    ci_lo: float
    ci_hi: float
    traces: list[Trace] = field(default_factory=list)

    @property
    def rolling(self) -> np.ndarray:
        """Running average cost per replication, ``cumsum / (t + 1)``."""
        steps = np.arange(1, self.costs.shape[1] + 1)
        return np.cumsum(self.costs, axis=1) / steps

    @property
    def rolling_mean(self) -> np.ndarray:
        return self.rolling.mean(axis=0)


def bootstrap_ci(values, resamples: int, confidence: float, rng: RngStream) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``values``."""
    values = np.asarray(values, dtype=np.float64)
    k = len(values)
    means = np.empty(resamples)
    for b in range(resamples):
        idx = [rng.randbelow(k) for _ in range(k)]
        means[b] = values[idx].mean()
    alpha = 1.0 - confidence
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    # the interval must contain the point estimate
    centre = values.mean()
    return float(min(lo, centre)), float(max(hi, centre))


def _replicate(inst, policy, cfg: EvalConfig, r: int):
    base = RngStream(cfg.seed).spawn(r)
    env = base.spawn(0)
    own = base.spawn(1)
    demand = dynamics.DemandSampler(inst.demand)
    s = dynamics.sample_state(inst, env)
    costs = np.empty(cfg.horizon)
    trace = Trace(*(np.empty((cfg.horizon, k), dtype=np.int64)
                    for k in (inst.m, inst.n, inst.m, inst.m, inst.m)))
    discounted = 0.0
    for t in range(cfg.horizon):
        x = np.asarray(policy.decide(inst, s, own), dtype=np.int64)
        if not dynamics.is_feasible(inst, s, x):
            raise RuntimeError(f"policy {policy.name} returned an infeasible decision at {s}")
        d = demand(env)
        c = dynamics.cost(inst, s, x, d)
        s_next = dynamics.transition(inst, s, x, d)
        costs[t] = c
        discounted += cfg.gamma**t * c
        trace.states[t], trace.decisions[t], trace.demands[t] = s, x, d
        trace.available[t] = dynamics.post_decision(inst, s, x)
        trace.next_states[t] = s_next
        s = s_next
    return costs, discounted, trace


def simulate(inst: ProblemInstance, policy: Policy, cfg: EvalConfig) -> EvalReport:
    """Run ``cfg.replications`` trajectories of ``cfg.horizon`` steps under ``policy``."""
    reps = range(cfg.replications)
    if cfg.threads > 1 and cfg.replications > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            out = list(pool.map(lambda r: _replicate(inst, policy, cfg, r), reps))
    else:
        out = [_replicate(inst, policy, cfg, r) for r in reps]
    costs = np.stack([o[0] for o in out])
    rep_means = costs.mean(axis=1)
    lo, hi = bootstrap_ci(rep_means, cfg.bootstrap_resamples, cfg.confidence,
                          RngStream(cfg.seed).spawn(BOOTSTRAP_STREAM))
    report = EvalReport(
        policy=getattr(policy, "name", type(policy).__name__),
        costs=costs,
        replication_means=rep_means,
        discounted=np.array([o[1] for o in out]),
        mean=float(rep_means.mean()),
        ci_lo=lo,
        ci_hi=hi,
        traces=[o[2] for o in out] if cfg.traces else [],
    )
    log.info("%s: mean cost %.2f [%.2f, %.2f]", report.policy, report.mean, lo, hi)
    return report


def reevaluate_run(inst: ProblemInstance, run: TrainRun, cfg: EvalConfig,
                   cem_cfg: CemConfig | None = None) -> tuple[int, list[EvalReport]]:
    """Simulate the greedy policy of every stored parameter vector.

    Returns the index of the lowest mean cost (first on ties) and all reports.
    """
    if not run.thetas:
        raise ValueError("training run holds no parameter vectors")
    if cem_cfg is None:
        cem_cfg = CemConfig(**run.config["cem"]) if "cem" in run.config else CemConfig()
    reports = []
    for i, theta in enumerate(run.thetas):
        policy = GreedyPolicy(run.basis, theta, cem_cfg, name=f"theta_{i + 1}")
        reports.append(simulate(inst, policy, cfg))
    best = int(np.argmin([r.mean for r in reports]))
    return best, reports


@dataclass
class SweepRow:
    gamma: float
    mean: float
    ci_lo: float
    ci_hi: float
    best_index: int


def sweep_gamma(inst: ProblemInstance, gammas, train_cfg: TrainConfig,
                eval_cfg: EvalConfig) -> list[SweepRow]:
    """Train and re-evaluate once per discount factor.

    Every value trains with the same seed, so a row depends only on its own
    gamma. Rows come back in ascending gamma order.
    """
    gammas = sorted({float(g) for g in gammas})
    if not gammas:
        raise ValueError("no discount factors given")
    rows = []
    for gamma in gammas:
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"discount factor {gamma} outside (0, 1)")
        run = train(inst, replace(train_cfg, gamma=gamma))
        best, reports = reevaluate_run(inst, run, eval_cfg, train_cfg.cem)
        r = reports[best]
        rows.append(SweepRow(gamma, r.mean, r.ci_lo, r.ci_hi, best))
        log.info("gamma %.3f: best policy %d, mean cost %.2f", gamma, best + 1, r.mean)
    return rows


# ---------------------------------------------------------------- CSV output

def _write(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _num(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else str(v)


def write_costs_csv(report: EvalReport, path) -> None:
    rolling = report.rolling
    rows = ((r, t, _num(report.costs[r, t]), _num(rolling[r, t]))
            for r in range(report.costs.shape[0]) for t in range(report.costs.shape[1]))
    _write(path, COSTS_COLUMNS, rows)


def write_summary_csv(reports, path) -> None:
    _write(path, SUMMARY_COLUMNS,
           ((r.policy, _num(r.mean), _num(r.ci_lo), _num(r.ci_hi)) for r in reports))


def write_inventory_csv(report: EvalReport, path, replication: int = 0) -> None:
    """Initial and available inventory plus demand for one replication."""
    if not report.traces:
        raise ValueError("report was simulated without traces")
    tr = report.traces[replication]
    rows = []
    for t in range(tr.states.shape[0]):
        for i in range(tr.states.shape[1]):
            rows.append((t, i + 1, int(tr.states[t, i]), int(tr.available[t, i]),
                         int(tr.demands[t, i])))
    _write(path, INVENTORY_COLUMNS, rows)


def write_gamma_sweep_csv(rows, path) -> None:
    _write(path, SWEEP_COLUMNS,
           ((_num(r.gamma), _num(r.mean), _num(r.ci_lo), _num(r.ci_hi)) for r in rows))
