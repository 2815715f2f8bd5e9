"""Benchmark policies: myopic integer program, uniform-random, and greedy.

The myopic policy cuts, each period, the cheapest (trim cost) set of objects
that lifts inventory to the expected demand. Its integer program has no
capacity rows; when the optimum breaks ``x_max`` or ``s_max`` it is re-solved
with them, keeping as many coverage rows as stay reachable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import dynamics
from .basis import BasisSpec
from .cem import CemConfig, greedy_action
from .instance import DemandSpec, ProblemInstance
from .rng import RngStream

log = logging.getLogger(__name__)

EPS = 1e-9


class Policy(Protocol):
    name: str

    def decide(self, inst: ProblemInstance, s: np.ndarray, rng: RngStream) -> np.ndarray:
        ...


def expected_demand(demand: DemandSpec) -> np.ndarray:
    """Mean of the demand mixture: ``p * (d_min + d_max) / 2``."""
    return demand.p * ((demand.d_min + demand.d_max) / 2.0)


@dataclass(frozen=True)
class MyopicConfig:
    d_bar: np.ndarray
    node_cap: int = 2_000_000

    def __post_init__(self):
        if np.any(np.asarray(self.d_bar) < 0):
            raise ValueError("expected demand must be non-negative")


@dataclass
class IlpResult:
    x: np.ndarray | None
    objective: float
    optimal: bool  # search finished within the node cap
    nodes: int


def _dual_bound(resid, cols, gs, k, n, m) -> float:
    """LP-free lower bound on covering ``resid`` with patterns ``k..n-1``.

    Builds weights ``w >= 0`` with ``sum_i w_i a_ij <= g_j`` for every free
    pattern (greedily, largest residual first); by weak duality
    ``sum_i w_i resid_i`` never exceeds the optimum. Returns ``inf`` when some
    positive residual has no free pattern covering it.
    """
    slack = gs[k:n]
    slack = list(slack)
    items = sorted((i for i in range(m) if resid[i] > EPS), key=lambda i: (-resid[i], i))
    total = 0.0
    for i in items:
        w = math.inf
        for jj in range(k, n):
            aij = cols[jj][i]
            if aij > 0:
                r = slack[jj - k] / aij
                if r < w:
                    w = r
        if w == math.inf:
            return math.inf
        if w > 0.0:
            for jj in range(k, n):
                aij = cols[jj][i]
                if aij > 0:
                    slack[jj - k] -= w * aij
            total += w * resid[i]
    return total


def solve_covering_ilp(a: np.ndarray, g: np.ndarray, need: np.ndarray, *,
                       base: np.ndarray | None = None, s_max: int | None = None,
                       x_max: int | None = None, node_cap: int = 2_000_000) -> IlpResult:
    """min g.x  s.t.  A x >= need,  x >= 0 integer  [, sum x <= x_max, base + A x <= s_max].

    Depth-first branch and bound over patterns in ascending ``g`` order with
    the dual-feasible bound of :func:`_dual_bound`. With capacity rows, a node
    is also cut when some residual exceeds what the free patterns can still
    add. ``need`` may be fractional (or ``-inf`` to drop a row).
    """
    a = np.asarray(a, dtype=np.int64)
    g = np.asarray(g, dtype=np.float64)
    m, n = a.shape
    capped = x_max is not None
    if capped and base is None:
        raise ValueError("capacity rows need the base inventory")
    order = sorted(range(n), key=lambda j: (g[j], j))
    cols = [[int(v) for v in a[:, j]] for j in order]
    gs = [float(g[j]) for j in order]
    resid0 = [float(v) for v in need]
    room0 = None if base is None else [s_max - int(v) for v in base]

    best_obj = math.inf
    best_x = None
    nodes = 0
    aborted = False
    x = [0] * n

    def cap_of(k, used, room):
        col = cols[k]
        u = x_max - used
        for i in range(m):
            if col[i] > 0:
                u = min(u, room[i] // col[i])
        return u

    def dfs(k, resid, obj, used, room):
        nonlocal best_obj, best_x, nodes, aborted
        nodes += 1
        if nodes > node_cap:
            aborted = True
            return
        if all(r <= EPS for r in resid):
            if obj < best_obj - EPS:
                best_obj = obj
                best_x = list(x)
            return
        if k == n:
            return
        if obj + _dual_bound(resid, cols, gs, k, n, m) >= best_obj - EPS:
            return
        if capped:
            caps = [cap_of(kk, used, room) for kk in range(k, n)]
            for i in range(m):
                if resid[i] > EPS:
                    reach = 0
                    for kk in range(k, n):
                        reach += cols[kk][i] * caps[kk - k]
                    if reach < resid[i] - EPS:
                        return
        col = cols[k]
        upper = 0
        for i in range(m):
            if col[i] > 0 and resid[i] > EPS:
                upper = max(upper, math.ceil(resid[i] / col[i] - EPS))
        if capped:
            upper = min(upper, cap_of(k, used, room))
        for v in range(upper, -1, -1):
            x[order[k]] = v
            dfs(k + 1, [resid[i] - v * col[i] for i in range(m)], obj + v * gs[k], used + v,
                None if room is None else [room[i] - v * col[i] for i in range(m)])
            if aborted:
                break
        x[order[k]] = 0

    dfs(0, resid0, 0.0, 0, room0)
    xs = None if best_x is None else np.array(best_x, dtype=np.int64)
    return IlpResult(xs, best_obj, not aborted, nodes)


@dataclass
class MyopicResult:
    x: np.ndarray
    objective: float
    status: str  # "optimal", "clipped" or "fallback-zero"
    dropped_items: list[int] = field(default_factory=list)


def solve_myopic(inst: ProblemInstance, s, cfg: MyopicConfig) -> MyopicResult:
    s = np.asarray(s, dtype=np.int64)
    need = np.asarray(cfg.d_bar, dtype=np.float64) - s
    res = solve_covering_ilp(inst.a, inst.costs.g, need, node_cap=cfg.node_cap)
    if res.optimal and res.x is not None and dynamics.is_feasible(inst, s, res.x):
        return MyopicResult(res.x, res.objective, "optimal")

    # capacity-constrained re-solve; rows with need <= 0 hold for any x >= 0,
    # the rest are retained largest expected demand first
    def capped(rows):
        masked = np.where(np.isin(np.arange(inst.m), rows), need, -math.inf)
        return solve_covering_ilp(inst.a, inst.costs.g, masked, base=s, s_max=inst.s_max,
                                  x_max=inst.x_max, node_cap=cfg.node_cap)

    active = [i for i in range(inst.m) if need[i] > EPS]
    order = sorted(active, key=lambda i: (-cfg.d_bar[i], i))
    best = capped(order)
    keep = list(order)
    if best.x is None:
        keep = []
        best = IlpResult(np.zeros(inst.n, dtype=np.int64), 0.0, True, 0)
        for i in order:
            r = capped(keep + [i])
            if r.x is not None:
                keep.append(i)
                best = r
    keep = sorted(set(keep) | (set(range(inst.m)) - set(active)))
    dropped = sorted(set(range(inst.m)) - set(keep))
    status = "clipped" if set(keep) & set(active) or best.objective > 0 else "fallback-zero"
    log.debug("myopic decision clipped at state %s; dropped items %s", s.tolist(), dropped)
    return MyopicResult(best.x, best.objective, status, dropped)


def myopic_decide(inst: ProblemInstance, s, cfg: MyopicConfig) -> np.ndarray:
    return solve_myopic(inst, s, cfg).x


class MyopicPolicy:
    name = "myopic"

    def __init__(self, inst: ProblemInstance, cfg: MyopicConfig | None = None):
        self.cfg = cfg or MyopicConfig(expected_demand(inst.demand))
        self.clipped = 0
        self.calls = 0

    def decide(self, inst, s, rng=None):
        res = solve_myopic(inst, s, self.cfg)
        self.calls += 1
        if res.status != "optimal":
            self.clipped += 1
        return res.x


class RandomPolicy:
    """Generator-uniform feasible decisions (approximately uniform over X_s)."""

    name = "random"

    def __init__(self, cap: int = dynamics.DEFAULT_REJECTION_CAP):
        self.cap = cap

    def decide(self, inst, s, rng):
        return dynamics.sample_feasible_decision(inst, s, dynamics.uniform_probs(inst.n), rng,
                                                 self.cap)


def random_decide(inst: ProblemInstance, s, rng: RngStream) -> np.ndarray:
    return RandomPolicy().decide(inst, s, rng)


class GreedyPolicy:
    """Cross-entropy greedy decisions under fixed linear parameters."""

    def __init__(self, spec: BasisSpec, theta, cem_cfg: CemConfig | None = None,
                 name: str = "trained"):
        self.spec = spec
        self.theta = np.asarray(theta, dtype=np.float64)
        self.cem_cfg = cem_cfg or CemConfig()
        self.name = name

    def decide(self, inst, s, rng):
        return greedy_action(inst, self.spec, self.theta, s, self.cem_cfg, rng)
