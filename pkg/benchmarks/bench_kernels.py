"""Compare the compiled and pure-Python kernels on the cross-entropy search.

    python benchmarks/bench_kernels.py [--calls N]

Both backends draw the same random numbers, so they also return the same
decisions; the script checks that while timing them.
"""

import argparse
import time

import numpy as np

from stochcut import default_paper_instance, dynamics
from stochcut._backend import compiled_kernels, python_kernels
from stochcut.basis import default_basis
from stochcut.cem import CemConfig
from stochcut.rng import RngStream, cumulative


def time_cem(kernels, inst, spec, theta, states, cfg):
    rng = RngStream(1)
    out = []
    start = time.perf_counter()
    for s in states:
        x, *_ = kernels.cem_search(
            rng, s, inst.a_contig, inst.s_max, inst.x_max, spec.kind_code,
            np.ascontiguousarray(spec.terms), spec.cos_table, theta, spec.normalize,
            cfg.n_iterations, cfg.n_candidates, cfg.n_elite, cfg.smoothing, cfg.rejection_cap)
        out.append(x)
    return time.perf_counter() - start, out


def time_sampler(kernels, inst, states, reps):
    cum, last = cumulative(dynamics.uniform_probs(inst.n))
    cum = np.array(cum)
    rng = RngStream(2)
    start = time.perf_counter()
    for s in states:
        for _ in range(reps):
            kernels.sample_feasible(rng, s, inst.a_contig, cum, last, inst.s_max, inst.x_max,
                                    10_000)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--calls", type=int, default=20, help="greedy searches per backend")
    args = parser.parse_args()

    inst = default_paper_instance()
    spec = default_basis(inst, "fourier")
    src = RngStream(0)
    theta = np.array([src.normal() for _ in range(spec.K)])
    states = [dynamics.sample_state(inst, src) for _ in range(args.calls)]
    cfg = CemConfig()

    backends = [("python", python_kernels())]
    if compiled_kernels() is not None:
        backends.insert(0, ("cython", compiled_kernels()))
    else:
        print("compiled kernels not built; timing the Python fallback only")

    results = {}
    for name, k in backends:
        t_cem, xs = time_cem(k, inst, spec, theta, states, cfg)
        t_smp = time_sampler(k, inst, states, 50)
        results[name] = xs
        print(f"{name:>7}: greedy search {1e3 * t_cem / len(states):8.2f} ms/call, "
              f"feasible draw {1e6 * t_smp / (50 * len(states)):8.1f} us/draw")
    if len(results) == 2:
        same = all(np.array_equal(a, b) for a, b in zip(results["cython"], results["python"]))
        print(f"decisions identical across backends: {same}")


if __name__ == "__main__":
    main()
