#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times every kernel on representative workloads (a 10-node network, its
45-pair comparison system, a 50k-sample trajectory) and prints the per-call
time of both backends plus the speedup.  The active backend for library
calls is selected at import time by the SYNC_TOOLKIT_NO_NUMBA environment
variable; this script always exercises both implementations directly.
"""

import argparse
import time

import numpy as np

from tempsync import _kernels as kern


def build_workloads(n=10, m=3, T=50_000, steps=2_000):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(n, n))
    np.fill_diagonal(A, 0.0)
    X = rng.normal(size=(n, m))
    states = rng.normal(size=(T, n, m))
    iu, ju, pidx = kern.pair_arrays(n)
    P = kern.n_pairs(n)
    alpha = rng.normal(size=P)
    delta, _ = kern.delta_gamma(A, alpha)
    E = kern.assemble_comparison(A, delta) - 1.0 * np.eye(P)
    b = np.abs(rng.normal(size=P))
    u0 = np.abs(rng.normal(size=P))
    S = 200
    Es = np.repeat(E[None, None], S, axis=0).repeat(3, axis=1).copy()
    bs = np.repeat(b[None, None], S, axis=0).repeat(3, axis=1).copy()
    hs = np.full(S, 1e-3)
    return {
        "coupling_term": (A, X, 1.5),
        "xi_series": (states, iu, ju),
        "e_hat_series": (states,),
        "delta_gamma": (A, alpha, iu, ju),
        "assemble_comparison": (A, delta, iu, ju, pidx),
        "rk4_const_linear": (E, b, u0, 1e-3, steps),
        "rk4_sampled_linear": (Es, bs, hs, u0),
        "rk4_const_principal": (E, np.eye(P), 1e-3, steps // 4),
        "rk4_sampled_principal": (Es, hs, np.eye(P)),
    }


def time_call(fn, args, repeats):
    fn(*args)  # warm-up (and jit compile on the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    workloads = build_workloads()
    have_numba = "numba" in kern.IMPLEMENTATIONS
    print(f"active backend: {kern.backend()}  (numba available: {have_numba})")
    header = f"{'kernel':<24} {'numpy':>12} {'numba':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call_args in workloads.items():
        t_np = time_call(kern.IMPLEMENTATIONS["numpy"][name], call_args, args.repeats)
        if have_numba:
            t_nb = time_call(kern.IMPLEMENTATIONS["numba"][name], call_args, args.repeats)
            print(f"{name:<24} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
                  f"{t_np / t_nb:>8.1f}x")
        else:
            print(f"{name:<24} {t_np * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")


if __name__ == "__main__":
    main()
