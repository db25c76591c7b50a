"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 20000] [--queries 2000]

Times each kernel on both backends over identical inputs and checks that the
outputs agree.
"""

import argparse
import time

import numpy as np

from geoacker import KRange, SyntheticSpec, TrainingSet, build_feature_index, generate
from geoacker.kernels import BACKENDS


def timed(fn, repeat=3):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(backend, coords, queries, labels, k):
    b = BACKENDS[backend]
    excl = np.full(len(queries), -1, dtype=np.int64)
    t_build, tree = timed(lambda: b.build_tree(coords, 16))
    t_query, (idx, dist) = timed(lambda: b.knn_query(coords, *tree, queries, k, excl))
    nbr = np.ascontiguousarray(labels[idx])
    ks = np.arange(1, k + 1, dtype=np.int64)
    t_vote, votes = timed(lambda: b.vote_predictions(nbr, ks, int(labels.max()) + 1))
    values = np.sort(dist[:, -1])
    ids = np.argsort(dist[:, -1], kind="stable").astype(np.int64)
    t_1d, near = timed(lambda: b.nearest_1d(values, ids, queries[:, 0].copy(), 100))
    timings = {"build_tree": t_build, "knn_query": t_query,
               "vote_predictions": t_vote, "nearest_1d": t_1d}
    return timings, (idx, dist, votes, near)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--k", type=int, default=50)
    args = ap.parse_args()

    ds = generate(SyntheticSpec(n_points=args.n, noise=0.25, seed=0))
    coords = np.ascontiguousarray(ds.coords)
    labels = np.ascontiguousarray(ds.labels)
    queries = np.random.default_rng(1).uniform(-5, 5, size=(args.queries, 2))

    results = {name: bench(name, coords, queries, labels, args.k) for name in sorted(BACKENDS)}
    names = sorted(results)
    print(f"n={args.n} queries={args.queries} k={args.k}")
    print(f"{'kernel':<18}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for kernel in results[names[0]][0]:
        row = [results[n][0][kernel] for n in names]
        line = f"{kernel:<18}" + "".join(f"{t * 1e3:>10.1f}ms" for t in row)
        if len(names) > 1:
            line += f"{row[names.index('python')] / row[names.index('cython')]:>11.1f}x"
        print(line)
    if len(names) > 1:
        same = all(np.array_equal(a, b) for a, b in zip(results["python"][1], results["cython"][1]))
        print(f"outputs identical: {same}")

    for name in names:
        train = TrainingSet(ds, backend=name)
        t, _ = timed(lambda: build_feature_index(train, "max_avg_comb", KRange.upto(args.k)), 1)
        print(f"build_feature_index(max_avg_comb, 1..{args.k}) [{name}]: {t:.2f}s")


if __name__ == "__main__":
    main()
