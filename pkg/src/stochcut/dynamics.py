"""MDP dynamics: transition, period cost, feasible set and samplers.

States, decisions and demands are ``int64`` vectors of length ``m``, ``n``
and ``m``. Demand is independent of the state and decision; the samplers
accept only what they use.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from ._backend import kernels
from .errors import SamplingError
from .instance import DemandSpec, ProblemInstance
from .rng import RngStream, cumulative

DEFAULT_REJECTION_CAP = 10_000


def _vec(v, size: int, label: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.int64)
    if arr.shape != (size,):
        raise ValueError(f"{label} must have shape ({size},), got {arr.shape}")
    return arr


def post_decision(inst: ProblemInstance, s, x) -> np.ndarray:
    """Available inventory after cutting: ``s + A x``."""
    return _vec(s, inst.m, "state") + inst.a @ _vec(x, inst.n, "decision")


def is_feasible(inst: ProblemInstance, s, x) -> bool:
    s = np.asarray(s)
    x = np.asarray(x)
    if s.shape != (inst.m,) or x.shape != (inst.n,):
        return False
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.equal(np.mod(x, 1), 0)):
            return False
        x = x.astype(np.int64)
    if np.any(x < 0) or x.sum() > inst.x_max:
        return False
    return bool(np.all(s + inst.a @ x <= inst.s_max))


def transition(inst: ProblemInstance, s, x, d) -> np.ndarray:
    """Next initial inventory ``max(0, s + A x - d)``; unmet demand is lost."""
    avail = post_decision(inst, s, x)
    return np.maximum(avail - _vec(d, inst.m, "demand"), 0)


def cost_terms(inst: ProblemInstance, s, x, d) -> tuple[float, float, float]:
    """(trim, holding, lost-sales) components of the period cost."""
    x = _vec(x, inst.n, "decision")
    avail = post_decision(inst, s, x)
    d = _vec(d, inst.m, "demand")
    c = inst.costs
    trim = float(c.g @ x)
    holding = float(c.h_plus @ np.maximum(avail - d, 0))
    lost = float(c.h_minus @ np.maximum(d - avail, 0))
    return trim, holding, lost


def cost(inst: ProblemInstance, s, x, d) -> float:
    trim, holding, lost = cost_terms(inst, s, x, d)
    return trim + holding + lost


class DemandSampler:
    """Cached cumulative probabilities for repeated demand draws."""

    def __init__(self, spec: DemandSpec):
        self.spec = spec
        cum, self.last = cumulative(spec.p)
        self.cum = np.array(cum, dtype=np.float64)

    def __call__(self, rng: RngStream, s=None, x=None) -> np.ndarray:
        return kernels.sample_demand(rng, self.cum, self.last, self.spec.d_min, self.spec.d_max)


def sample_demand(inst: ProblemInstance, rng: RngStream) -> np.ndarray:
    """Total ~ DiscUnif(d_min, d_max), then that many categorical item draws."""
    return DemandSampler(inst.demand)(rng)


def sample_state(inst: ProblemInstance, rng: RngStream) -> np.ndarray:
    """Each item's inventory drawn independently from DiscUnif(0, s_max)."""
    return np.array([rng.randbelow(inst.s_max + 1) for _ in range(inst.m)], dtype=np.int64)


def uniform_probs(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def sample_feasible_decision(inst: ProblemInstance, s, probs, rng: RngStream,
                             cap: int = DEFAULT_REJECTION_CAP) -> np.ndarray:
    """Rejection sampler over X_s.

    Repeats ``total ~ DiscUnif(0, x_max)``, ``x ~ Multinomial(total, probs)``
    until ``x`` is feasible. With uniform ``probs`` this stands in for a
    uniform draw from X_s; it is not exactly uniform.
    """
    s = _vec(s, inst.m, "state")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (inst.n,):
        raise ValueError(f"probs must have shape ({inst.n},), got {probs.shape}")
    if abs(math.fsum(probs) - 1.0) > 1e-9 or np.any(probs < 0):
        raise ValueError("probs must be a probability vector")
    cum, last = cumulative(probs)
    x = kernels.sample_feasible(rng, s, inst.a_contig, np.array(cum), last,
                                inst.s_max, inst.x_max, cap)
    if x is None:
        raise SamplingError(f"no feasible decision after {cap} attempts at state {s.tolist()}")
    return x


def enumerate_feasible(inst: ProblemInstance, s) -> Iterator[np.ndarray]:
    """All decisions in X_s, in lexicographic order. Micro-instances only."""
    s = _vec(s, inst.m, "state")
    n = inst.n
    a = inst.a

    def rec(j, used, avail, prefix):
        if j == n:
            yield np.array(prefix, dtype=np.int64)
            return
        col = a[:, j]
        k = 0
        while used + k <= inst.x_max and np.all(avail + k * col <= inst.s_max):
            yield from rec(j + 1, used + k, avail + k * col, prefix + [k])
            k += 1

    yield from rec(0, 0, s.copy(), [])


def enumerate_states(inst: ProblemInstance) -> Iterator[np.ndarray]:
    for s in itertools.product(range(inst.s_max + 1), repeat=inst.m):
        yield np.array(s, dtype=np.int64)


def demand_pmf(spec: DemandSpec) -> list[tuple[np.ndarray, float]]:
    """Exact support and probabilities of the demand mixture.

    Sums ``Multinomial(total, p) * 1/(d_max - d_min + 1)`` over totals.
    Exponential in ``m``; meant for micro-instances and oracles.
    """
    m = len(spec.p)
    weight = 1.0 / (spec.d_max - spec.d_min + 1)
    mass: dict[tuple, float] = {}
    for total in range(spec.d_min, spec.d_max + 1):
        for comp in _compositions(total, m):
            prob = math.factorial(total)
            for k, pk in zip(comp, spec.p):
                prob = prob / math.factorial(k) * pk**k
            if prob > 0.0:
                mass[comp] = mass.get(comp, 0.0) + weight * prob
    return [(np.array(d, dtype=np.int64), pr) for d, pr in sorted(mass.items())]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
