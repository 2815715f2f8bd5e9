"""Cross-entropy search for a greedy decision under a linear q-function.

Candidates come from ``total ~ DiscUnif(0, x_max)``, ``x ~ Multinomial(total,
p)`` with rejection of infeasible draws. After each round the pattern
probabilities are refit to the elite candidates by their usage frequency.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._backend import kernels
from .basis import BasisSpec
from .dynamics import DEFAULT_REJECTION_CAP
from .errors import SamplingError
from .instance import ProblemInstance
from .rng import RngStream


@dataclass(frozen=True)
class CemConfig:
    n_iterations: int = 10
    n_candidates: int = 100
    rho: float = 0.1
    rejection_cap: int = DEFAULT_REJECTION_CAP
    smoothing: float = 0.0

    def __post_init__(self):
        if self.n_iterations < 1 or self.n_candidates < 1:
            raise ValueError("n_iterations and n_candidates must be at least 1")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.rejection_cap < 1:
            raise ValueError("rejection_cap must be at least 1")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError("smoothing must lie in [0, 1]")

    @property
    def n_elite(self) -> int:
        return max(1, math.ceil(self.rho * self.n_candidates))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CemResult:
    x: np.ndarray
    q: float
    best_q_trace: np.ndarray  # best q after each round
    probs: np.ndarray  # pattern probabilities after the final update


def update_probs(elites, probs=None) -> np.ndarray:
    """Pattern usage frequencies over the elite decisions.

    When every elite is the zero decision the frequencies are undefined and
    ``probs`` is returned unchanged (it is required in that case).
    """
    elites = np.atleast_2d(np.asarray(elites, dtype=np.int64))
    if elites.size == 0:
        raise ValueError("elite set is empty")
    counts = elites.sum(axis=0)
    total = counts.sum()
    if total == 0:
        if probs is None:
            raise ValueError("all elites are zero and no previous probabilities were given")
        return np.asarray(probs, dtype=np.float64).copy()
    return counts / total


def greedy_search(inst: ProblemInstance, spec: BasisSpec, params, s, cfg: CemConfig,
                  rng: RngStream) -> CemResult:
    theta = np.ascontiguousarray(params, dtype=np.float64)
    if theta.shape != (spec.K,):
        raise ValueError(f"parameter vector has shape {theta.shape}, basis has K={spec.K}")
    s = np.ascontiguousarray(s, dtype=np.int64)
    x, q, trace, probs, ok = kernels.cem_search(
        rng, s, inst.a_contig, inst.s_max, inst.x_max, spec.kind_code,
        np.ascontiguousarray(spec.terms), spec.cos_table, theta, spec.normalize,
        cfg.n_iterations, cfg.n_candidates, cfg.n_elite, cfg.smoothing, cfg.rejection_cap,
    )
    if not ok:
        raise SamplingError(
            f"candidate generation exhausted {cfg.rejection_cap} attempts at state {s.tolist()}"
        )
    return CemResult(x, q, trace, probs)


def greedy_action(inst: ProblemInstance, spec: BasisSpec, params, s, cfg: CemConfig,
                  rng: RngStream) -> np.ndarray:
    """Heuristic ``argmin_x phi(s, x) . theta`` over X_s."""
    return greedy_search(inst, spec, params, s, cfg, rng).x
