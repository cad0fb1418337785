"""Time the compiled and pure-Python kernels on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--edges 200000] [--runs 10] [--repeat 5]
"""

import argparse
import logging
import time

import numpy as np

from flowcomm import kernels, synthetic

logger = logging.getLogger("bench")


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--edges", type=int, default=200_000)
    parser.add_argument("--degree", type=float, default=10.0, help="mean degree")
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rng = np.random.default_rng(args.seed)
    n = int(2 * args.edges / args.degree)
    g = synthetic.random_edges(n, args.edges, rng)
    x = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, size=(n, args.runs)))
    steady = np.ascontiguousarray(rng.uniform(0.1, 1.0, size=(n, args.runs)))
    out = np.empty_like(x)
    vals = np.empty(g.num_edges)
    ok = np.empty(g.num_edges, np.uint8)
    diag = np.ascontiguousarray(g.degrees)
    logger.info("N=%d, |E|=%d, Y=%d, threads=%d", n, g.num_edges, args.runs, args.threads)

    names = kernels.available_backends()
    table = {}
    for name in names:
        k = kernels.backend(name)
        k.edge_similarity(g.edge_src, g.edge_dst, x, steady, False, 1e-12, vals, ok, 1)
        table[name] = {
            "euler_step": best_of(lambda: k.euler_step(
                g.indptr, g.indices, g.data, diag, x, 0.01, out, args.threads), args.repeat),
            "edge_similarity": best_of(lambda: k.edge_similarity(
                g.edge_src, g.edge_dst, x, steady, False, 1e-12, vals, ok, args.threads),
                args.repeat),
            "threshold_labels": best_of(lambda: k.threshold_labels(
                n, g.edge_src, g.edge_dst, vals, ok, 0.5), args.repeat),
        }
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in ("euler_step", "edge_similarity", "threshold_labels"):
        times = [table[name][kernel] for name in names]
        line = f"{kernel:<18}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(names) == 2:
            line += f"{times[1] / times[0]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
