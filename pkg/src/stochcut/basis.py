"""Polynomial and cosine-Fourier features over the post-decision state.

Both bases see a decision only through ``s + A x``, so two decisions that
produce the same items get the same features.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _pykernels
from .dynamics import post_decision
from .instance import ProblemInstance

log = logging.getLogger(__name__)

KINDS = ("polynomial", "fourier")


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Declarative basis: kind, ``K x m`` term matrix, normalisation constant.

    ``terms`` holds exponent vectors for the polynomial basis and frequency
    vectors for the Fourier basis. ``normalize`` divides the polynomial
    inputs by ``s_max``; the Fourier basis is always normalised.
    """

    kind: str
    terms: np.ndarray
    s_max: int
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {KINDS}")
        terms = np.array(self.terms, dtype=np.int64)
        if terms.ndim != 2 or terms.shape[0] < 1 or terms.shape[1] < 1:
            raise ValueError(f"terms must be a non-empty K x m matrix, got shape {terms.shape}")
        if np.any(terms < 0):
            raise ValueError("term entries must be non-negative")
        if self.s_max < 1:
            raise ValueError("s_max must be positive")
        if self.kind == "fourier" and len({tuple(r) for r in terms.tolist()}) != len(terms):
            raise ValueError("duplicate Fourier frequency vectors")
        terms.setflags(write=False)
        object.__setattr__(self, "terms", terms)

    @property
    def K(self) -> int:
        return self.terms.shape[0]

    @property
    def m(self) -> int:
        return self.terms.shape[1]

    @property
    def kind_code(self) -> int:
        return _pykernels.FOURIER if self.kind == "fourier" else _pykernels.POLYNOMIAL

    @cached_property
    def cos_table(self) -> np.ndarray:
        """``cos(pi * j / s_max)`` for every reachable integer ``j = c_k . s^x``.

        Features and the compiled kernels both read from this table so they
        agree to the last bit. Polynomial specs get a one-entry dummy.
        """
        if self.kind != "fourier":
            return np.ones(1)
        top = int(self.terms.sum(axis=1).max()) * self.s_max
        return np.array([math.cos(math.pi * j / self.s_max) for j in range(top + 1)])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "terms": self.terms.tolist(), "s_max": self.s_max,
                "normalize": self.normalize}

    @classmethod
    def from_dict(cls, doc: dict) -> "BasisSpec":
        return cls(doc["kind"], np.array(doc["terms"], dtype=np.int64), int(doc["s_max"]),
                   bool(doc.get("normalize", False)))


def default_terms(kind: str, m: int, *, degree: int = 2, max_frequency: int = 2,
                  max_interactions: int = 2) -> np.ndarray:
    """Default term matrix for ``kind``.

    polynomial
        Bias, then each pure power ``s_i^e`` for ``e = 1..degree``
        (``K = 1 + degree * m``; 15 for ``m = 7``).
    fourier
        The zero vector, then every vector with at most ``max_interactions``
        nonzero entries drawn from ``1..max_frequency``
        (``K = 99`` for ``m = 7`` at the defaults).
    """
    if m < 1:
        raise ValueError("m must be positive")
    rows = [[0] * m]
    if kind == "polynomial":
        for e in range(1, degree + 1):
            for i in range(m):
                row = [0] * m
                row[i] = e
                rows.append(row)
    elif kind == "fourier":
        for r in range(1, max_interactions + 1):
            for idx in itertools.combinations(range(m), r):
                for freqs in itertools.product(range(1, max_frequency + 1), repeat=r):
                    row = [0] * m
                    for i, f in zip(idx, freqs):
                        row[i] = f
                    rows.append(row)
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return np.array(rows, dtype=np.int64)


def default_basis(inst: ProblemInstance, kind: str = "fourier", **order) -> BasisSpec:
    normalize = order.pop("normalize", False)
    return BasisSpec(kind, default_terms(kind, inst.m, **order), inst.s_max, normalize)


def features_post(spec: BasisSpec, post) -> np.ndarray:
    """Feature vector of a post-decision state."""
    post = np.asarray(post, dtype=np.int64)
    if post.shape != (spec.m,):
        raise ValueError(f"post-decision state must have shape ({spec.m},), got {post.shape}")
    if spec.kind == "fourier":
        if np.any(post < 0) or np.any(post > spec.s_max):
            log.warning("post-decision state %s outside [0, %d]; clamping", post.tolist(),
                        spec.s_max)
            post = np.clip(post, 0, spec.s_max)
        return spec.cos_table[spec.terms @ post]
    base = post / spec.s_max if spec.normalize else post.astype(np.float64)
    out = np.empty(spec.K)
    for k, row in enumerate(spec.terms):
        phi = 1.0
        for c, b in zip(row.tolist(), base.tolist()):
            for _ in range(c):
                phi *= b
        out[k] = phi
    return out


def features(inst: ProblemInstance, spec: BasisSpec, s, x) -> np.ndarray:
    return features_post(spec, post_decision(inst, s, x))


def q_value(phi, params) -> float:
    """Linear action value ``phi . theta``."""
    phi = np.asarray(phi, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    if phi.shape != params.shape:
        raise ValueError(f"feature length {phi.shape} does not match parameters {params.shape}")
    return float(phi @ params)
