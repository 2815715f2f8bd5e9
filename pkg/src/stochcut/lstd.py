"""Policy evaluation by least-squares solution of the projected Bellman equation.

The accumulator keeps running sums

    A += phi (phi - gamma * phi_next)^T,    b += phi * cost

(the 1/N normalisation cancels in ``A theta = b``). Transitions are weighted
only by how often they are fed in.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dynamics
from .basis import BasisSpec, features_post
from .cem import CemConfig, greedy_action
from .errors import EmptySampleError
from .instance import ProblemInstance
from .rng import RngStream

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10
DEFAULT_CHUNK = 250


@dataclass
class TransitionSample:
    phi_sx: np.ndarray
    phi_next: np.ndarray
    cost: float


@dataclass
class LstdAccumulator:
    K: int
    gamma: float
    A_hat: np.ndarray = field(default=None)
    b_hat: np.ndarray = field(default=None)
    count: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.A_hat is None:
            self.A_hat = np.zeros((self.K, self.K))
        if self.b_hat is None:
            self.b_hat = np.zeros(self.K)

    def absorb(self, t: TransitionSample) -> "LstdAccumulator":
        phi = np.asarray(t.phi_sx, dtype=np.float64)
        nxt = np.asarray(t.phi_next, dtype=np.float64)
        if phi.shape != (self.K,) or nxt.shape != (self.K,):
            raise ValueError(f"feature vectors must have length {self.K}")
        self.A_hat += np.outer(phi, phi - self.gamma * nxt)
        self.b_hat += phi * t.cost
        self.count += 1
        return self

    def absorb_batch(self, phi, phi_next, costs) -> "LstdAccumulator":
        """Absorb rows of ``phi``/``phi_next`` at once (same sums, one matmul)."""
        phi = np.asarray(phi, dtype=np.float64)
        nxt = np.asarray(phi_next, dtype=np.float64)
        costs = np.asarray(costs, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != self.K or nxt.shape != phi.shape:
            raise ValueError(f"feature batches must be N x {self.K}")
        if costs.shape != (phi.shape[0],):
            raise ValueError("one cost per row required")
        self.A_hat += phi.T @ (phi - self.gamma * nxt)
        self.b_hat += phi.T @ costs
        self.count += phi.shape[0]
        return self

    def merge(self, other: "LstdAccumulator") -> "LstdAccumulator":
        if other.K != self.K or other.gamma != self.gamma:
            raise ValueError("cannot merge accumulators of different shape or discount")
        self.A_hat += other.A_hat
        self.b_hat += other.b_hat
        self.count += other.count
        return self


def absorb(acc: LstdAccumulator, t: TransitionSample) -> LstdAccumulator:
    return acc.absorb(t)


@dataclass
class LstdSolution:
    theta: np.ndarray
    path: str  # "exact" or "pinv"
    condition: float
    count: int
    mean_cost: float = math.nan


def solve_detailed(acc: LstdAccumulator, *, ridge: float = 0.0,
                   rtol: float = RANK_RTOL) -> LstdSolution:
    """Solve ``(A + ridge I) theta = b``.

    A direct solve is used when the smallest singular value exceeds ``rtol``
    times the largest; otherwise the minimum-norm least-squares solution.
    """
    if acc.count == 0:
        raise EmptySampleError("no transitions absorbed")
    A = acc.A_hat + ridge * np.eye(acc.K) if ridge else acc.A_hat
    b = acc.b_hat
    sv = np.linalg.svd(A, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    cond = top / sv[-1] if sv[-1] > 0 else math.inf
    if top > 0 and sv[-1] > rtol * top:
        theta = np.linalg.solve(A, b)
        path = "exact"
    else:
        theta = np.linalg.lstsq(A, b, rcond=rtol)[0]
        path = "pinv"
    log.debug("lstd solve: path=%s cond=%.3e |theta|=%.3e", path, cond, np.linalg.norm(theta))
    return LstdSolution(theta, path, float(cond), acc.count)


def solve(acc: LstdAccumulator, *, ridge: float = 0.0) -> np.ndarray:
    return solve_detailed(acc, ridge=ridge).theta


def _simulate_chunk(inst, spec, params_prev, cem_cfg, root: RngStream, start: int, stop: int):
    demand = dynamics.DemandSampler(inst.demand)
    probs = dynamics.uniform_probs(inst.n)
    rows = stop - start
    phi = np.empty((rows, spec.K))
    phi_next = np.empty((rows, spec.K))
    costs = np.empty(rows)
    for r, t in enumerate(range(start, stop)):
        rng = root.spawn(t)
        s = dynamics.sample_state(inst, rng)
        x = dynamics.sample_feasible_decision(inst, s, probs, rng, cem_cfg.rejection_cap)
        d = demand(rng)
        costs[r] = dynamics.cost(inst, s, x, d)
        s_next = dynamics.transition(inst, s, x, d)
        x_next = greedy_action(inst, spec, params_prev, s_next, cem_cfg, rng)
        phi[r] = features_post(spec, s + inst.a @ x)
        phi_next[r] = features_post(spec, s_next + inst.a @ x_next)
    return phi, phi_next, costs


def evaluate_policy(inst: ProblemInstance, spec: BasisSpec, params_prev, gamma: float, L2: int,
                    rng: RngStream, cem_cfg: CemConfig | None = None, *, ridge: float = 0.0,
                    threads: int = 1, chunk: int = DEFAULT_CHUNK) -> LstdSolution:
    """Sample ``L2`` off-policy transitions and solve for the greedy policy's q.

    Each transition ``t`` draws from ``rng.spawn(t)``: a uniform state, a
    generator-uniform feasible decision, a demand, then the cross-entropy
    greedy decision under ``params_prev`` at the next state. Chunks of
    ``chunk`` transitions are reduced in order, so the result does not
    depend on ``threads``.
    """
    if L2 < 1:
        raise ValueError("L2 must be at least 1")
    cem_cfg = cem_cfg or CemConfig()
    bounds = [(lo, min(lo + chunk, L2)) for lo in range(0, L2, chunk)]
    work = lambda b: _simulate_chunk(inst, spec, params_prev, cem_cfg, rng, *b)
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    acc = LstdAccumulator(spec.K, gamma)
    total_cost = 0.0
    for phi, phi_next, costs in parts:
        acc.absorb_batch(phi, phi_next, costs)
        total_cost += float(costs.sum())
    sol = solve_detailed(acc, ridge=ridge)
    sol.mean_cost = total_cost / L2
    return sol


def exact_accumulator(inst: ProblemInstance, feature_fn: Callable, policy: Callable,
                      gamma: float) -> LstdAccumulator:
    """Accumulate every ``(s, x in X_s)`` pair once with exact expectations.

    ``phi_next`` is ``E_d[feature_fn(s', policy(s'))]`` and the cost is
    ``E_d[c(s, x, d)]`` under the exact demand distribution. Micro-instances
    only.
    """
    pmf = dynamics.demand_pmf(inst.demand)
    acc = None
    for s in dynamics.enumerate_states(inst):
        for x in dynamics.enumerate_feasible(inst, s):
            phi = np.asarray(feature_fn(s, x), dtype=np.float64)
            if acc is None:
                acc = LstdAccumulator(phi.size, gamma)
            nxt = np.zeros_like(phi)
            cbar = 0.0
            for d, pr in pmf:
                s2 = dynamics.transition(inst, s, x, d)
                nxt += pr * np.asarray(feature_fn(s2, policy(s2)), dtype=np.float64)
                cbar += pr * dynamics.cost(inst, s, x, d)
            acc.absorb(TransitionSample(phi, nxt, cbar))
    return acc
