"""Pure-Python hot kernels.

Reference semantics for ``_ckernels``: both modules consume the random
stream identically and sum in the same order, so they return bit-identical
results for the same inputs.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RngStream

FOURIER = 0
POLYNOMIAL = 1


def _cum(probs):
    cum = []
    acc = 0.0
    last = -1
    for j, p in enumerate(probs):
        acc += p
        cum.append(acc)
        if p > 0.0:
            last = j
    return cum, last


def sample_demand(rng: RngStream, cum, last: int, d_min: int, d_max: int) -> np.ndarray:
    m = len(cum)
    d = [0] * m
    total = d_min + rng.randbelow(d_max - d_min + 1)
    for _ in range(total):
        d[rng.categorical(cum, last)] += 1
    return np.array(d, dtype=np.int64)


def _draw_feasible(rng, s, cols, cum, last, s_max, x_max, cap):
    """Rejection loop; returns (x, post) lists or None once ``cap`` attempts fail.

    A candidate is abandoned as soon as some item exceeds ``s_max``; the
    accepted draws are distributed exactly as full-draw-then-check.
    """
    n = len(cols)
    attempts = 0
    while attempts < cap:
        attempts += 1
        total = rng.randbelow(x_max + 1)
        x = [0] * n
        post = list(s)
        feasible = True
        for _ in range(total):
            j = rng.categorical(cum, last)
            x[j] += 1
            for i, aij in enumerate(cols[j]):
                post[i] += aij
                if post[i] > s_max:
                    feasible = False
            if not feasible:
                break
        if feasible:
            return x, post
    return None


def sample_feasible(rng: RngStream, s, a, cum, last: int, s_max: int, x_max: int, cap: int):
    cols = [list(map(int, col)) for col in np.asarray(a).T]
    drawn = _draw_feasible(rng, [int(v) for v in s], cols, list(cum), last, s_max, x_max, cap)
    if drawn is None:
        return None
    return np.array(drawn[0], dtype=np.int64)


def _q_value(post, kind, terms, table, theta, normalize, s_max):
    q = 0.0
    if kind == FOURIER:
        for k, row in enumerate(terms):
            dot = 0
            for c, v in zip(row, post):
                dot += c * v
            q += theta[k] * table[dot]
    else:
        if normalize:
            base = [v / s_max for v in post]
        else:
            base = [float(v) for v in post]
        for k, row in enumerate(terms):
            phi = 1.0
            for c, b in zip(row, base):
                for _ in range(c):
                    phi *= b
            q += theta[k] * phi
    return q


def cem_search(rng: RngStream, s, a, s_max: int, x_max: int, kind: int, terms, table, theta,
               normalize: bool, n_iter: int, n_cand: int, n_elite: int, smoothing: float,
               cap: int):
    """Cross-entropy search over feasible decisions; see ``cem.greedy_search``."""
    n = a.shape[1]
    cols = [list(map(int, col)) for col in np.asarray(a).T]
    s = [int(v) for v in s]
    terms = [list(map(int, row)) for row in np.asarray(terms)]
    table = [float(v) for v in table]
    theta = [float(v) for v in theta]
    probs = [1.0 / n] * n
    best_q = math.inf
    best_x = None
    trace = np.empty(n_iter, dtype=np.float64)
    for it in range(n_iter):
        cum, last = _cum(probs)
        cands = []
        qs = []
        for _ in range(n_cand):
            drawn = _draw_feasible(rng, s, cols, cum, last, s_max, x_max, cap)
            if drawn is None:
                return None, best_q, trace[:it], np.array(probs), False
            x, post = drawn
            q = _q_value(post, kind, terms, table, theta, normalize, s_max)
            cands.append(x)
            qs.append(q)
            if q < best_q:
                best_q = q
                best_x = x
        trace[it] = best_q
        delta = sorted(qs)[n_elite - 1]
        counts = [0] * n
        for x, q in zip(cands, qs):
            if q <= delta:
                for j in range(n):
                    counts[j] += x[j]
        total = 0
        for c in counts:
            total += c
        if total > 0:
            probs = [(1.0 - smoothing) * (counts[j] / total) + smoothing * probs[j]
                     for j in range(n)]
    return np.array(best_x, dtype=np.int64), best_q, trace, np.array(probs), True
