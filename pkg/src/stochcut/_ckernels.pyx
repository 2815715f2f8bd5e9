# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics defined by ``_pykernels``.

The stream state travels in and out through the ``RngStream`` object's
``key``/``counter`` attributes. Main loops run without the GIL.
"""

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport qsort
from libc.math cimport INFINITY

import numpy as np

cdef struct Rng:
    uint64_t key
    uint64_t counter


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t next_u64(Rng* r) noexcept nogil:
    r.counter += 1
    cdef uint64_t u = r.key + r.counter * 0x9E3779B97F4A7C15ULL
    return mix64(mix64(u) + r.key)


cdef inline double uniform01(Rng* r) noexcept nogil:
    return <double>(next_u64(r) >> 11) * (1.0 / 9007199254740992.0)


cdef inline uint64_t randbelow(Rng* r, uint64_t n) noexcept nogil:
    cdef uint64_t m = (next_u64(r) >> 32) * n
    cdef uint64_t low = m & 0xFFFFFFFFULL
    cdef uint64_t threshold
    if low < n:
        threshold = (0x100000000ULL - n) % n
        while low < threshold:
            m = (next_u64(r) >> 32) * n
            low = m & 0xFFFFFFFFULL
    return m >> 32


cdef inline Py_ssize_t categorical(Rng* r, const double* cum, Py_ssize_t n,
                                   Py_ssize_t last) noexcept nogil:
    cdef double u = uniform01(r)
    cdef Py_ssize_t j
    for j in range(n):
        if u < cum[j]:
            return j
    return last


cdef inline Rng load_rng(object stream):
    cdef Rng r
    r.key = <uint64_t>stream.key
    r.counter = <uint64_t>stream.counter
    return r


cdef inline void store_rng(object stream, Rng r):
    stream.counter = r.counter


def sample_demand(stream, const double[::1] cum, Py_ssize_t last, long d_min, long d_max):
    cdef Py_ssize_t m = cum.shape[0]
    out = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] d = out
    cdef Rng r = load_rng(stream)
    cdef uint64_t total, k
    with nogil:
        total = <uint64_t>d_min + randbelow(&r, <uint64_t>(d_max - d_min + 1))
        for k in range(total):
            d[categorical(&r, &cum[0], m, last)] += 1
    store_rng(stream, r)
    return out


cdef bint draw_feasible(Rng* r, const int64_t* s, const int64_t* a, Py_ssize_t m,
                        Py_ssize_t n, const double* cum, Py_ssize_t last, int64_t s_max,
                        int64_t x_max, long cap, int64_t* x, int64_t* post) noexcept nogil:
    # a is m x n row-major
    cdef long attempts = 0
    cdef uint64_t total, k
    cdef Py_ssize_t i, j
    cdef bint feasible
    while attempts < cap:
        attempts += 1
        total = randbelow(r, <uint64_t>(x_max + 1))
        for j in range(n):
            x[j] = 0
        for i in range(m):
            post[i] = s[i]
        feasible = True
        for k in range(total):
            j = categorical(r, cum, n, last)
            x[j] += 1
            for i in range(m):
                post[i] += a[i * n + j]
                if post[i] > s_max:
                    feasible = False
            if not feasible:
                break
        if feasible:
            return True
    return False


def sample_feasible(stream, const int64_t[::1] s, const int64_t[:, ::1] a,
                    const double[::1] cum, Py_ssize_t last, long s_max, long x_max, long cap):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    out = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] x = out
    cdef int64_t[::1] post = np.zeros(m, dtype=np.int64)
    cdef Rng r = load_rng(stream)
    cdef bint ok
    with nogil:
        ok = draw_feasible(&r, &s[0], &a[0, 0], m, n, &cum[0], last, s_max, x_max, cap,
                           &x[0], &post[0])
    store_rng(stream, r)
    if not ok:
        return None
    return out


cdef int cmp_double(const void* pa, const void* pb) noexcept nogil:
    cdef double x = (<const double*>pa)[0]
    cdef double y = (<const double*>pb)[0]
    return (x > y) - (x < y)


cdef double q_value(const int64_t* post, Py_ssize_t m, int kind, const int64_t* terms,
                    Py_ssize_t K, const double* table, const double* theta, bint normalize,
                    double s_max, double* base) noexcept nogil:
    cdef double q = 0.0, phi
    cdef Py_ssize_t k, i
    cdef int64_t dot, e
    if kind == 0:
        for k in range(K):
            dot = 0
            for i in range(m):
                dot += terms[k * m + i] * post[i]
            q += theta[k] * table[dot]
    else:
        for i in range(m):
            if normalize:
                base[i] = <double>post[i] / s_max
            else:
                base[i] = <double>post[i]
        for k in range(K):
            phi = 1.0
            for i in range(m):
                for e in range(terms[k * m + i]):
                    phi *= base[i]
            q += theta[k] * phi
    return q


def cem_search(stream, const int64_t[::1] s, const int64_t[:, ::1] a, long s_max, long x_max,
               int kind, const int64_t[:, ::1] terms, const double[::1] table,
               const double[::1] theta, bint normalize, long n_iter, long n_cand,
               long n_elite, double smoothing, long cap):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1], K = terms.shape[0]
    cdef double[::1] probs = np.full(n, 1.0 / n)
    cdef double[::1] cum = np.empty(n)
    cdef int64_t[:, ::1] cands = np.empty((n_cand, n), dtype=np.int64)
    cdef double[::1] qs = np.empty(n_cand)
    cdef double[::1] sorted_q = np.empty(n_cand)
    cdef int64_t[::1] post = np.empty(m, dtype=np.int64)
    cdef double[::1] base = np.empty(m)
    cdef int64_t[::1] counts = np.empty(n, dtype=np.int64)
    best_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] best_x = best_arr
    trace_arr = np.empty(n_iter)
    cdef double[::1] trace = trace_arr
    cdef double best_q = INFINITY, q, delta, acc
    cdef Py_ssize_t it, c, i, j, last
    cdef int64_t total
    cdef bint ok = True
    cdef long done = 0
    cdef Rng r = load_rng(stream)
    with nogil:
        for it in range(n_iter):
            acc = 0.0
            last = -1
            for j in range(n):
                acc += probs[j]
                cum[j] = acc
                if probs[j] > 0.0:
                    last = j
            for c in range(n_cand):
                if not draw_feasible(&r, &s[0], &a[0, 0], m, n, &cum[0], last, s_max, x_max,
                                     cap, &cands[c, 0], &post[0]):
                    ok = False
                    break
                q = q_value(&post[0], m, kind, &terms[0, 0], K, &table[0], &theta[0],
                            normalize, <double>s_max, &base[0])
                qs[c] = q
                if q < best_q:
                    best_q = q
                    for j in range(n):
                        best_x[j] = cands[c, j]
            if not ok:
                break
            trace[it] = best_q
            done += 1
            for c in range(n_cand):
                sorted_q[c] = qs[c]
            qsort(&sorted_q[0], n_cand, sizeof(double), cmp_double)
            delta = sorted_q[n_elite - 1]
            for j in range(n):
                counts[j] = 0
            for c in range(n_cand):
                if qs[c] <= delta:
                    for j in range(n):
                        counts[j] += cands[c, j]
            total = 0
            for j in range(n):
                total += counts[j]
            if total > 0:
                for j in range(n):
                    probs[j] = (1.0 - smoothing) * (<double>counts[j] / <double>total) \
                        + smoothing * probs[j]
    store_rng(stream, r)
    if not ok:
        return None, best_q, trace_arr[:done], np.asarray(probs), False
    return best_arr, best_q, trace_arr, np.asarray(probs), True
