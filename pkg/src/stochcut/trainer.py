"""Approximate policy iteration driver.

Each iteration simulates ``L2`` transitions under the greedy policy of the
current parameters and solves the projected Bellman equation for the next
ones. Every parameter vector is kept: successive policies oscillate, so the
best one is chosen afterwards by re-evaluation.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec
from .cem import CemConfig
from .errors import StochcutError
from .instance import ProblemInstance, instance_from_dict, instance_to_dict
from .lstd import DEFAULT_CHUNK, evaluate_policy
from .rng import RngStream

log = logging.getLogger(__name__)

ARTIFACT_FORMAT = "stochcut.trainrun"
ARTIFACT_VERSION = 1

# top-level stream tags
THETA0_STREAM = 0
ITERATION_STREAM = 1


@dataclass(frozen=True)
class TrainConfig:
    basis: BasisSpec
    gamma: float = 0.8
    L1: int = 30
    L2: int = 50_000
    cem: CemConfig = field(default_factory=CemConfig)
    seed: int = 0
    theta0_stddev: float = 1.0
    ridge: float = 0.0
    threads: int = 1
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.L1 < 1 or self.L2 < 1:
            raise ValueError("L1 and L2 must be at least 1")
        if self.theta0_stddev < 0:
            raise ValueError("theta0_stddev must be non-negative")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")

    def echo(self) -> dict:
        """Settings that determine the result (thread count excluded)."""
        return {
            "gamma": self.gamma, "L1": self.L1, "L2": self.L2, "seed": self.seed,
            "theta0_stddev": self.theta0_stddev, "ridge": self.ridge, "chunk": self.chunk,
            "cem": self.cem.to_dict(),
        }


@dataclass
class IterationDiagnostics:
    iteration: int
    solver_path: str
    condition: float
    theta_norm: float
    mean_cost: float
    transitions: int


@dataclass
class TrainRun:
    basis: BasisSpec
    thetas: list[np.ndarray]
    diagnostics: list[IterationDiagnostics]
    config: dict
    theta0: np.ndarray | None = None
    complete: bool = True
    error: str | None = None
    instance: ProblemInstance | None = None
    wall_times: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = {
            "format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "generator": f"stochcut {__version__}",
            "complete": self.complete,
            "error": self.error,
            "config": self.config,
            "basis": self.basis.to_dict(),
            "theta0": None if self.theta0 is None else self.theta0.tolist(),
            "thetas": [t.tolist() for t in self.thetas],
            "diagnostics": [asdict(d) for d in self.diagnostics],
        }
        if self.instance is not None:
            doc["instance"] = instance_to_dict(self.instance)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainRun":
        if doc.get("format") != ARTIFACT_FORMAT:
            raise StochcutError("not a training artifact")
        if doc.get("version") != ARTIFACT_VERSION:
            raise StochcutError(f"unsupported artifact version {doc.get('version')}")
        return cls(
            basis=BasisSpec.from_dict(doc["basis"]),
            thetas=[np.array(t, dtype=np.float64) for t in doc["thetas"]],
            diagnostics=[IterationDiagnostics(**d) for d in doc["diagnostics"]],
            config=doc["config"],
            theta0=None if doc.get("theta0") is None else np.array(doc["theta0"]),
            complete=doc["complete"],
            error=doc.get("error"),
            instance=instance_from_dict(doc["instance"]) if "instance" in doc else None,
        )

    def save(self, path) -> None:
        # sorted keys + repr floats: identical runs give identical bytes
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=True)
        Path(path).write_text(text + "\n")

    @classmethod
    def load(cls, path) -> "TrainRun":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StochcutError(f"cannot read artifact {path}: {exc}") from None
        return cls.from_dict(doc)


class TrainingAborted(StochcutError):
    """Raised with the partial run attached when an iteration fails."""

    def __init__(self, message: str, run: TrainRun):
        super().__init__(message)
        self.run = run


def initial_theta(cfg: TrainConfig) -> np.ndarray:
    rng = RngStream(cfg.seed).spawn(THETA0_STREAM)
    return np.array([cfg.theta0_stddev * rng.normal() for _ in range(cfg.basis.K)])


def train(inst: ProblemInstance, cfg: TrainConfig, progress=None) -> TrainRun:
    """Run ``L1`` approximate policy iterations; returns all parameter vectors.

    Iteration ``i`` samples from ``RngStream(seed).spawn(1, i)``, so its
    transitions do not depend on ``L1``. ``progress(i, diag)`` is called
    after each iteration when given.
    """
    if cfg.basis.m != inst.m or cfg.basis.s_max != inst.s_max:
        raise ValueError("basis does not match the instance dimensions")
    theta = initial_theta(cfg)
    run = TrainRun(cfg.basis, [], [], cfg.echo(), theta0=theta.copy(), instance=inst)
    root = RngStream(cfg.seed).spawn(ITERATION_STREAM)
    for i in range(cfg.L1):
        started = time.perf_counter()
        try:
            sol = evaluate_policy(inst, cfg.basis, theta, cfg.gamma, cfg.L2, root.spawn(i),
                                  cfg.cem, ridge=cfg.ridge, threads=cfg.threads,
                                  chunk=cfg.chunk)
        except StochcutError as exc:
            run.complete = False
            run.error = f"iteration {i}: {exc}"
            raise TrainingAborted(run.error, run) from exc
        theta = sol.theta
        diag = IterationDiagnostics(i + 1, sol.path, sol.condition,
                                    float(np.linalg.norm(theta)), sol.mean_cost, sol.count)
        run.thetas.append(theta)
        run.diagnostics.append(diag)
        run.wall_times.append(time.perf_counter() - started)
        log.info("iteration %d/%d: path=%s cond=%.3e |theta|=%.4g mean_cost=%.2f (%.1fs)",
                 i + 1, cfg.L1, diag.solver_path, diag.condition, diag.theta_norm,
                 diag.mean_cost, run.wall_times[-1])
        if progress is not None:
            progress(i, diag)
    return run
