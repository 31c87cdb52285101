"""Time the compiled orbit loop against the pure-Python one.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat K]
"""
import argparse
import timeit

import numpy as np

from ricker_pbc import kernels
from ricker_pbc.model import ModelParams, equilibrium


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = ModelParams(3.0, 2.5, 0.5, 0.5)
    K = equilibrium(params)
    rng = np.random.Generator(np.random.Philox(7))
    al = 0.34 + 0.2 * rng.choice([-1.0, 1.0], args.steps)
    be = 0.15 + 0.1 * rng.choice([-1.0, 1.0], args.steps)

    results = {}
    for name in sorted(kernels.BACKENDS):
        for label, fn in (
            ("orbit", lambda: kernels.orbit(params, 4.0, 1.1, al, be, backend=name)),
            ("orbit_tail", lambda: kernels.orbit_tail(params, 4.0, 1.1, al, be, 1000, K, 0.05,
                                                      backend=name)),
        ):
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            results[name, label] = best
            print(f"{name:9s} {label:11s} {best * 1e3:9.2f} ms  "
                  f"{args.steps / best / 1e6:7.2f} Msteps/s")

    if "compiled" in kernels.BACKENDS:
        for label in ("orbit", "orbit_tail"):
            print(f"speedup {label}: {results['python', label] / results['compiled', label]:.1f}x")
        same = np.array_equal(kernels.orbit(params, 4.0, 1.1, al, be, backend="python"),
                              kernels.orbit(params, 4.0, 1.1, al, be, backend="compiled"))
        print(f"bit-identical orbits: {same}")
    else:
        print("compiled backend not built; only the Python loop was timed")


if __name__ == "__main__":
    main()
