"""Compiled kernels versus the numpy fallback.

    python benchmarks/bench_kernels.py [--groups 3] [--size 120] [--repeat 3]

Times exhaustive enumeration (the brute-force oracle's inner loop) and the
knapsack table fill on the same random instance for every available
backend and checks that the backends agree.
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from otlp import kernels


def instance(groups: int, size: int, rows: int, seed: int):
    rng = random.Random(seed)
    costs = [[rng.randint(-10_000, 10_000) for _ in range(size)] for _ in range(groups)]
    coupling = [[[rng.randint(0, 100) for _ in range(size)] for _ in range(groups)] for _ in range(rows)]
    bounds = [50 * groups for _ in range(rows)]
    return costs, coupling, bounds


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run(groups: int = 3, size: int = 120, rows: int = 2, capacity: int = 20_000, repeat: int = 3, seed: int = 0):
    costs, coupling, bounds = instance(groups, size, rows, seed)
    weights = [[w * 10 for w in row] for row in coupling[0]] if coupling else [[0] * size for _ in range(groups)]
    results = {}
    for backend in kernels.BACKENDS:
        enum = kernels.enumerate_min(costs, coupling, bounds, backend=backend)
        table = kernels.mckp_table(costs, weights, capacity, backend=backend)
        results[backend] = {
            "enumerate": best_of(lambda: kernels.enumerate_min(costs, coupling, bounds, backend=backend), repeat),
            "knapsack": best_of(lambda: kernels.mckp_table(costs, weights, capacity, backend=backend), repeat),
            "answer": (enum, int(table[0][capacity])),
        }
    answers = {r["answer"] for r in results.values()}
    if len(answers) != 1:
        raise SystemExit(f"backends disagree: {answers}")
    return results


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--groups", type=int, default=3)
    parser.add_argument("--size", type=int, default=120)
    parser.add_argument("--rows", type=int, default=2)
    parser.add_argument("--capacity", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    results = run(args.groups, args.size, args.rows, args.capacity, args.repeat, args.seed)
    tuples = args.size**args.groups
    print(f"{args.groups} groups x {args.size} candidates ({tuples:,} tuples), {args.rows} coupling rows, "
          f"knapsack capacity {args.capacity:,}")
    print(f"{'backend':<8} {'enumerate [s]':>14} {'knapsack [s]':>13}")
    for backend, r in results.items():
        print(f"{backend:<8} {r['enumerate']:>14.4f} {r['knapsack']:>13.4f}")
    if len(results) == 2:
        c, p = results["cython"], results["python"]
        print(f"speedup  {p['enumerate'] / c['enumerate']:>13.1f}x {p['knapsack'] / c['knapsack']:>12.1f}x")


if __name__ == "__main__":
    main()
