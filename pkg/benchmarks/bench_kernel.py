"""Compiled vs pure-Python best-path kernel on a 100 x 100 m cell.

    python benchmarks/bench_kernel.py [--repeat 5] [--sources 8]

Runs both kernels from the same candidate sources, checks the outputs are
bit-identical and prints per-search timings.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from arrayplace import pathgraph as pg
from arrayplace.environment import Environment, build_grid, candidate_locations


def time_backend(graph, sources, angular, backend, repeat):
    times, results = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        results = [pg.best_paths(graph, s, angular, backend=backend) for s in sources]
        times.append((time.perf_counter() - t0) / len(sources))
    return statistics.median(times), results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sources", type=int, default=8, help="searches per timing run")
    args = ap.parse_args(argv)

    if pg.BACKEND != "compiled":
        print("compiled kernel not available; build the extension first", file=sys.stderr)
        return 1
    env = Environment(100, 100, [[(30, 30), (70, 30), (70, 70), (30, 70)]])
    grid = build_grid(env)
    graph = pg.build_graph(grid)
    sources = [n for c in candidate_locations(grid) for n in c][: args.sources]
    print(f"cell: {grid.n_nodes} nodes, {int(grid.active.sum())} active, {len(sources)} sources")
    for angular in (False, True):
        label = "angular" if angular else "plain"
        t_c, r_c = time_backend(graph, sources, angular, "compiled", args.repeat)
        t_p, r_p = time_backend(graph, sources, angular, "python", args.repeat)
        same = all(
            np.array_equal(a.dist, b.dist) and np.array_equal(a.v, b.v) and np.array_equal(a.prev, b.prev)
            for a, b in zip(r_c, r_p)
        )
        print(f"{label:8s} compiled {t_c * 1e3:8.2f} ms  python {t_p * 1e3:8.2f} ms  "
              f"speed-up {t_p / t_c:6.1f}x  identical={same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
