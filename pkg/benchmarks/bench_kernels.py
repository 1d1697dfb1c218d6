#!/usr/bin/env python3
"""Benchmark the pure-numpy kernels against the compiled extension.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the three hot kernels (fused cross moments, soft thresholding,
max-norm difference) on a few problem sizes typical of the Monte Carlo
experiments and prints the per-call best-of-N times plus the speedup of the
compiled backend over numpy. Run after `pip install -e .`; if the extension
is not built only the numpy column appears.
"""

import argparse
import timeit

import numpy as np

from factorcov import _pykernels

try:
    from factorcov import _fastkernels
except ImportError:
    _fastkernels = None

SIZES = [(50, 200), (100, 400), (200, 800), (400, 1600)]


def _best_time(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def _bench_case(impl, u, s, mu, repeats):
    return {
        "cross_moments": _best_time(lambda: impl.cross_moments(u), repeats),
        "soft_threshold": _best_time(lambda: impl.soft_threshold_matrix(s, mu), repeats),
        "max_abs_diff": _best_time(lambda: impl.max_abs_diff(s, mu), repeats),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7, help="best-of-N timing")
    args = parser.parse_args()

    backends = [("numpy", _pykernels)]
    if _fastkernels is not None:
        backends.append(("compiled", _fastkernels))
    else:
        print("note: compiled extension not built; showing numpy only\n")

    rng = np.random.default_rng(0)
    header = f"{'kernel':<16}{'p':>6}{'n':>7}" + "".join(
        f"{name + ' (ms)':>16}" for name, _ in backends
    )
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for p, n in SIZES:
        u = np.ascontiguousarray(rng.standard_normal((p, n)))
        s, q = _pykernels.cross_moments(u)
        mu = 0.1 * np.sqrt(q)
        results = [_bench_case(impl, u, s, mu, args.repeats) for _, impl in backends]
        for kernel in ("cross_moments", "soft_threshold", "max_abs_diff"):
            row = f"{kernel:<16}{p:>6}{n:>7}"
            for res in results:
                row += f"{res[kernel] * 1e3:>16.3f}"
            if len(results) == 2:
                row += f"{results[0][kernel] / results[1][kernel]:>9.2f}x"
            print(row)
        print()

    if len(backends) == 2:
        u = np.ascontiguousarray(rng.standard_normal((100, 400)))
        s_py, q_py = _pykernels.cross_moments(u)
        s_c, q_c = _fastkernels.cross_moments(u)
        dev = max(float(np.max(np.abs(s_py - s_c))), float(np.max(np.abs(q_py - q_c))))
        print(f"backend agreement on (100, 400) cross moments: max |diff| = {dev:.2e}")


if __name__ == "__main__":
    main()
