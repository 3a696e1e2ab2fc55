"""Time the compiled trial-loop kernel against the pure-Python fallback.

Usage: python3 benchmarks/compare_backends.py [--trials N] [--iters N]
"""

import argparse
import time

import numpy as np

from clse import kernels
from clse.filters import ALGORITHMS, DcdParams
from clse.model import DataStream, derive_context, generate_scenario


def time_backend(backend, algorithm, scenario, X, y, g, repeats):
    algo_id = kernels.ALGO_IDS[algorithm]
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.run_trial_kernel(algo_id, X, y, scenario, g, 1e-2,
                                 DcdParams(), backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=3000,
                        help="iterations per trial loop")
    parser.add_argument("--repeats", type=int, default=3,
                        help="repeats per measurement (best is kept)")
    parser.add_argument("--L", type=int, default=7)
    parser.add_argument("--K", type=int, default=3)
    args = parser.parse_args()

    scenario = generate_scenario(1, args.L, args.K, 0.995, 1e3, 0.1)
    g = np.ascontiguousarray(derive_context(scenario).g)
    X, y, _ = DataStream(scenario, 0).take(args.iters)
    X = np.ascontiguousarray(X)

    backends = kernels.available_backends()
    print(f"L={args.L} K={args.K}, {args.iters} iterations per trial; "
          f"backends: {', '.join(backends)}")
    header = f"{'algorithm':<10} " + " ".join(f"{b:>12}" for b in backends)
    if "native" in backends and "python" in backends:
        header += f" {'speedup':>9}"
    print(header)
    for algorithm in ALGORITHMS:
        times = {b: time_backend(b, algorithm, scenario, X, y, g, args.repeats)
                 for b in backends}
        row = f"{algorithm:<10} " + " ".join(f"{times[b]*1e3:>10.1f}ms"
                                             for b in backends)
        if "native" in times and "python" in times:
            row += f" {times['python'] / times['native']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
