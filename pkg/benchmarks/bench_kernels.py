"""Time the numba kernels against the numpy/python reference path.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Both builds are always importable from kamcrit._kernels.IMPLEMENTATIONS, so
this script compares them in one process regardless of KAMCRIT_NUMBA.
"""

import argparse
import time

import numpy as np

from kamcrit._kernels import IMPLEMENTATIONS, numba_available


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not numba_available():
        print("numba backend unavailable (or disabled before import); nothing to compare")
        return 1

    ref = IMPLEMENTATIONS["numpy"]
    jit = IMPLEMENTATIONS["numba"]

    rng = np.random.default_rng(0)
    scan_q = rng.uniform(-np.pi, np.pi, 2048)
    scan_p = rng.uniform(0, 2 * np.pi, 2048)
    orbit_q = rng.uniform(-np.pi, np.pi, 89)
    seeds_q = rng.uniform(-np.pi, np.pi, 32)
    seeds_p = rng.uniform(0, 2 * np.pi, 32)

    cases = [
        ("final_state 2e6 steps", "final_state", (0.1, 3.88, 0.97, 2_000_000)),
        ("trajectory 1e5 steps", "trajectory", (0.1, 3.88, 0.97, 100_000)),
        ("batch_final_state 2048x89", "batch_final_state", (scan_q, scan_p, 0.97, 89)),
        ("batch_trajectory 32x1e4", "batch_trajectory", (seeds_q, seeds_p, 0.97, 10_000)),
        ("monodromy_product n=89 x2e4", None, None),  # handled below
        ("max_p_deviation 1e4 steps x100", None, None),
    ]

    # warm up the JIT once per kernel
    jit["final_state"](0.0, 1.0, 0.5, 10)
    jit["trajectory"](0.0, 1.0, 0.5, 10)
    jit["batch_final_state"](seeds_q, seeds_p, 0.5, 10)
    jit["batch_trajectory"](seeds_q, seeds_p, 0.5, 10)
    jit["monodromy_product"](orbit_q, 0.5)
    jit["max_p_deviation"](1e-4, 0.0, 0.5, 100, 0.0, 0.0)

    def mono_many(impl):
        def run(qs, k):
            for _ in range(20_000):
                impl["monodromy_product"](qs, k)
        return run

    def widths_many(impl):
        def run():
            for _ in range(100):
                impl["max_p_deviation"](1e-4, 0.0, 0.3, 10_000, 0.0, 0.0)
        return run

    rows = []
    for label, key, fargs in cases:
        if key is not None:
            t_ref = _time(ref[key], *fargs, repeats=args.repeats)
            t_jit = _time(jit[key], *fargs, repeats=args.repeats)
        elif label.startswith("monodromy"):
            t_ref = _time(mono_many(ref), orbit_q, 0.97, repeats=args.repeats)
            t_jit = _time(mono_many(jit), orbit_q, 0.97, repeats=args.repeats)
        else:
            t_ref = _time(widths_many(ref), repeats=args.repeats)
            t_jit = _time(widths_many(jit), repeats=args.repeats)
        rows.append((label, t_ref, t_jit))

    print(f"{'kernel':<34} {'numpy/py':>10} {'numba':>10} {'speedup':>8}")
    for label, t_ref, t_jit in rows:
        print(f"{label:<34} {t_ref * 1e3:9.1f}ms {t_jit * 1e3:9.1f}ms {t_ref / t_jit:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
