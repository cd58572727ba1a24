#!/usr/bin/env python3
"""Benchmark: numba @njit kernel vs pure-numpy fallback for Monte Carlo
dependency-graph reliability.

Both paths consume the same sampled leaf states, so their estimates are
identical; only the speed differs. Run:

    python3 benchmarks/bench_depgraph_mc.py [--samples N]

CLOUDRISK_NO_NUMBA=1 makes the library default to the numpy path; this
script always times both explicitly.
"""

import argparse
import random
import time

from cloudrisk._kernels import numba_available
from cloudrisk.depgraph import DepGraph, reliability_exact, reliability_mc


def layered_graph(n_leaves=18, n_gates=60, seed=7):
    """A wide DAG with heavy sharing, the shape this analysis targets."""
    rng = random.Random(seed)
    nodes = {f"l{i}": {"leaf": round(rng.uniform(0.6, 0.99), 3)} for i in range(n_leaves)}
    pool = list(nodes)
    for g in range(n_gates):
        kind = rng.choice(["and", "or"])
        nodes[f"g{g}"] = {kind: rng.sample(pool, k=rng.randint(2, 4))}
        pool.append(f"g{g}")
    return DepGraph.from_dict({"nodes": nodes, "root": f"g{n_gates - 1}"})


def best_of(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return result, best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=123)
    args = parser.parse_args()

    graph = layered_graph()
    exact = reliability_exact(graph)
    print(f"graph: {len(graph.nodes)} nodes, {len(graph.leaves)} leaves, "
          f"exact reliability {exact:.6f}")
    print(f"samples per run: {args.samples}")

    if numba_available():
        # warm the JIT cache before timing
        reliability_mc(graph, 1000, seed=0, use_numba=True)
        mc_jit, t_jit = best_of(
            lambda: reliability_mc(graph, args.samples, args.seed, use_numba=True))
        print(f"numba kernel : {t_jit:.3f}s  estimate={mc_jit.estimate:.6f} "
              f"(±{mc_jit.stderr:.6f})")
    else:
        mc_jit = None
        print("numba kernel : unavailable (numba not importable)")

    mc_np, t_np = best_of(
        lambda: reliability_mc(graph, args.samples, args.seed, use_numba=False))
    print(f"numpy kernel : {t_np:.3f}s  estimate={mc_np.estimate:.6f} "
          f"(±{mc_np.stderr:.6f})")

    if mc_jit is not None:
        assert mc_jit.estimate == mc_np.estimate, "kernel paths must agree exactly"
        print(f"estimates identical; speedup x{t_np / t_jit:.1f} "
              f"({'numba faster' if t_jit < t_np else 'numpy faster'})")


if __name__ == "__main__":
    main()
