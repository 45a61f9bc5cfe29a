"""Compare the compiled and numpy simulation backends.

    python3 benchmarks/bench_kernels.py [--subjects N] [--repeat R]

Checks that both backends produce identical panels, then reports the best
wall time of each over ``--repeat`` runs.
"""

import argparse
import time

import numpy as np

from edss_markov import kernels
from edss_markov.sim import (
    OMITTED_YEAR_STATIONARY,
    REFERENCE_BASELINE,
    SimConfig,
    dropout_for_total,
    reversible_chain,
    simulate_states,
)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = SimConfig(args.subjects, REFERENCE_BASELINE, reversible_chain(OMITTED_YEAR_STATIONARY, 0.2),
                    dropout_for_total(0.1, 12), seed=1)
    results = {}
    for name in sorted(kernels.BACKENDS):
        results[name] = best_time(lambda: simulate_states(cfg, args.threads, name), args.repeat)
        print(f"{name:>9}: {results[name][0]:.3f} s for {args.subjects} subjects x 12 intervals")
    if len(results) == 2:
        same = np.array_equal(results["python"][1], results["compiled"][1])
        print(f"identical output: {same}")
        print(f"speed-up: {results['python'][0] / results['compiled'][0]:.1f}x")
    else:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
