"""Compare the compiled Shapley kernel against the pure-Python fallback.

Both backends walk the same coalition table in the same order and must
produce bit-identical values; the only difference worth measuring is time.

Usage: python3 benchmarks/bench_shapley.py [--sizes 10,14,18] [--repeats 3]
"""
from __future__ import annotations

import argparse
import time
from array import array

import numpy as np

from calf._kernels.pure import aggregate_shapley as pure_kernel
from calf.shapley import shapley_weights

try:
    from calf._kernels._shapley_c import aggregate_shapley as compiled_kernel
except ImportError:
    compiled_kernel = None


def make_table(n: int, seed: int) -> array:
    rng = np.random.default_rng(seed)
    table = array("d", rng.uniform(0.0, 1.0, size=1 << n))
    table[0] = 0.0
    return table


def time_kernel(kernel, table: array, n: int, weights: array, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        kernel(table, n, weights)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10,14,18",
                        help="comma-separated player counts")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats; the best run is reported")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled_kernel is None:
        print("compiled kernel unavailable; timing the pure backend only")

    header = f"{'n':>4} {'table':>10} {'pure (s)':>12}"
    if compiled_kernel is not None:
        header += f" {'compiled (s)':>14} {'speedup':>9} {'identical':>10}"
    print(header)

    for n in sizes:
        table = make_table(n, seed=n)
        weights = array("d", shapley_weights(n))
        pure_time = time_kernel(pure_kernel, table, n, weights, args.repeats)
        row = f"{n:>4} {1 << n:>10} {pure_time:>12.4f}"
        if compiled_kernel is not None:
            compiled_time = time_kernel(compiled_kernel, table, n, weights, args.repeats)
            same = list(compiled_kernel(table, n, weights)) == list(
                pure_kernel(table, n, weights)
            )
            row += (
                f" {compiled_time:>14.4f}"
                f" {pure_time / compiled_time:>8.1f}x"
                f" {'yes' if same else 'NO':>10}"
            )
            if not same:
                print(row)
                print("backends disagree; this is a bug")
                return 1
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
