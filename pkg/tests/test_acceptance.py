"""Acceptance criteria A1-A10.

Each test records a one-line verdict that is printed in the terminal summary.
The A4-A6 experiment is deterministic; its numbers are pinned in
``tests/data/acceptance_baseline.json``. Regenerate that file with
``python3 tests/test_acceptance.py --write-baseline`` after an intended
change to the generator or the classifier.
"""

import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from geoacker import (AckerConfig, Dataset, GeoPoint, KRange, SyntheticSpec,  # noqa: E402
                      TrainingSet, acker_classify, acker_classify_batch, build,
                      build_feature_index, expected_accuracy, generate, knn_predict,
                      load_csv, pearson_r, roc_auc, sweep_fixed_k, sweep_kmax, sweep_l)
from geoacker.cli import main as cli_main  # noqa: E402

BASELINE = Path(__file__).parent / "data" / "acceptance_baseline.json"

RESULTS: list[str] = []

A4_SPEC = SyntheticSpec(n_points=6000, noise=0.25, seed=0)
A4_RANGE = KRange.upto(50)
A4_LS = [10, 50, 100, 200]
A4_FEATURE = "max_dist"
FOLDS, SEED = 10, 0


def verdict(name, ok, detail):
    RESULTS.append(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# ---------------------------------------------------------------- shared experiment

_cache = {}


def _a4_dataset():
    if "ds" not in _cache:
        _cache["ds"] = generate(A4_SPEC)
    return _cache["ds"]


def _fixed_k_report():
    if "fixed" not in _cache:
        t0 = time.perf_counter()
        _cache["fixed"] = sweep_fixed_k(_a4_dataset(), list(A4_RANGE), FOLDS, SEED)
        _cache["fixed_t"] = time.perf_counter() - t0
    return _cache["fixed"]


def _l_report():
    if "l" not in _cache:
        t0 = time.perf_counter()
        _cache["l"] = sweep_l(_a4_dataset(), A4_FEATURE, A4_RANGE, A4_LS, FOLDS, SEED)
        _cache["l_t"] = time.perf_counter() - t0
    return _cache["l"]


def _kmax_report():
    if "kmax" not in _cache:
        best_l = _l_report().best()[0]
        t0 = time.perf_counter()
        _cache["kmax"] = sweep_kmax(_a4_dataset(), A4_FEATURE, best_l, [50, 200], FOLDS, SEED)
        _cache["kmax_t"] = time.perf_counter() - t0
    return _cache["kmax"]


def _experiment_numbers():
    fixed, lrep, kmax = _fixed_k_report(), _l_report(), _kmax_report()
    return {
        "fixed_k_mean_acc": dict(zip(map(str, fixed.values), fixed.mean_acc)),
        "l_mean_acc": dict(zip(map(str, lrep.values), lrep.mean_acc)),
        "l_pearson_r": dict(zip(map(str, lrep.values), lrep.pearson)),
        "l_roc_auc": dict(zip(map(str, lrep.values), lrep.auc)),
        "kmax_l": lrep.best()[0],
        "kmax_mean_acc": dict(zip(map(str, kmax.values), kmax.mean_acc)),
    }


# ---------------------------------------------------------------- A1

def test_a1_neighbor_search_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    coords = rng.uniform(-10, 10, size=(500, 2))
    ds = Dataset(coords, np.zeros(500, dtype=int), ("x",))
    index = build(ds)
    queries = rng.uniform(-10, 10, size=(100, 2))
    excluded = rng.integers(0, 500, size=100)
    mismatches = 0
    for k in (1, 5, 17, 50):
        plain_idx, plain_d = index.query(queries, k)
        excl_idx, excl_d = index.query(queries, k, exclude=excluded)
        for j, q in enumerate(queries):
            ref = oracles.linear_knn(coords, q, k)
            ref_x = oracles.linear_knn(coords, q, k, exclude=int(excluded[j]))
            mismatches += plain_idx[j].tolist() != [i for i, _ in ref]
            mismatches += plain_d[j].tolist() != [d for _, d in ref]
            mismatches += excl_idx[j].tolist() != [i for i, _ in ref_x]
            mismatches += excl_d[j].tolist() != [d for _, d in ref_x]
    elapsed = time.perf_counter() - t0
    verdict("A1", mismatches == 0 and elapsed < 5.0,
            f"kd-tree vs linear scan: {mismatches} mismatches, {elapsed:.2f}s (limit 5s)")


# ---------------------------------------------------------------- A2

def test_a2_expected_accuracy_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    coords = rng.uniform(-5, 5, size=(200, 2))
    labels = rng.integers(0, 4, size=200)
    ds = Dataset(coords, labels, ("a", "b", "c", "d"))
    train = TrainingSet(ds)
    queries = rng.uniform(-5, 5, size=(50, 2))
    krange = KRange.upto(20)
    mismatches = checked = 0
    for kind in ("avg_dist", "max_dist", "max_avg_comb", "lat_lon"):
        fidx = build_feature_index(train, kind, krange)
        brute = oracles.BruteForcePipeline(kind, coords, labels)
        for q in queries:
            p = GeoPoint(*q)
            for k in krange:
                for l in (1, 10, 137):
                    checked += 1
                    mismatches += expected_accuracy(train, fidx, p, k, l) != \
                        brute.expected_accuracy(q, k, l)
    elapsed = time.perf_counter() - t0
    verdict("A2", mismatches == 0 and elapsed < 30.0,
            f"indexed vs brute-force expected accuracy: {mismatches}/{checked} mismatches, "
            f"{elapsed:.1f}s (limit 30s)")


# ---------------------------------------------------------------- A3

def test_a3_metric_correctness():
    rng = np.random.default_rng(303)
    s = rng.integers(0, 25, size=500) / 25
    c = rng.integers(0, 2, size=500)
    auc_exact = roc_auc(s, c) == oracles.pairwise_auc(s.tolist(), c.tolist())
    perfect = abs(roc_auc([0.9, 0.7, 0.6, 0.2, 0.1], [1, 1, 1, 0, 0]) - 1.0) <= 1e-12
    flat = abs(roc_auc([0.5] * 8, [1, 0, 0, 1, 1, 0, 1, 0]) - 0.5) <= 1e-12
    x = rng.random(1000)
    y = (rng.random(1000) < x).astype(int)
    r_err = abs(pearson_r(x, y) - oracles.two_pass_pearson(x.tolist(), y.tolist()))
    verdict("A3", auc_exact and perfect and flat and r_err <= 1e-12,
            f"AUC==pairwise oracle: {auc_exact}, separator=1: {perfect}, all-equal=0.5: {flat}, "
            f"|pearson - two-pass|={r_err:.1e}")


# ---------------------------------------------------------------- A4

def test_a4_adaptive_advantage():
    fixed, lrep = _fixed_k_report(), _l_report()
    elapsed = _cache["fixed_t"] + _cache["l_t"]
    best_k, best_fixed = fixed.best()
    worst_fixed = min(fixed.mean_acc)
    best_l, best_acker = lrep.best()
    ok = (best_acker >= best_fixed - 0.01 and best_acker >= worst_fixed + 0.05
          and elapsed < 180.0)
    verdict("A4", ok,
            f"ACKER best (l={best_l}) {best_acker:.4f} vs fixed-k best (k={best_k}) "
            f"{best_fixed:.4f} - 0.01 and worst {worst_fixed:.4f} + 0.05; {elapsed:.0f}s (limit 180s)")


def test_a4_matches_committed_baseline():
    pinned = json.loads(BASELINE.read_text())
    live = json.loads(json.dumps(_experiment_numbers()))
    assert pinned["spec"] == _spec_dict()
    for key, values in pinned["numbers"].items():
        if isinstance(values, dict):
            for v, x in values.items():
                y = live[key][v]
                assert (x is None and y is None) or abs(x - y) <= 1e-12, (key, v, x, y)
        else:
            assert values == live[key]


# ---------------------------------------------------------------- A5

def test_a5_range_plateau():
    rep = _kmax_report()
    acc = dict(zip(rep.values, rep.mean_acc))
    gap = abs(acc[50] - acc[200])
    elapsed = _cache["kmax_t"]
    verdict("A5", gap <= 0.01 and elapsed < 300.0,
            f"k_max=50 {acc[50]:.4f} vs k_max=200 {acc[200]:.4f} (|diff| {gap:.4f} <= 0.01) "
            f"at l={_l_report().best()[0]}; {elapsed:.0f}s (limit 300s)")


# ---------------------------------------------------------------- A6

def test_a6_score_validity():
    lrep = _l_report()
    good = [(l, r, a) for l, _, _, r, a in lrep.rows()
            if a is not None and r is not None and a > 0.55 and r > 0]
    detail = ", ".join(f"l={l}: auc {a:.3f} r {r:.3f}" for l, _, _, r, a in lrep.rows())
    verdict("A6", bool(good), f"{A4_FEATURE} needs some l with AUC > 0.55 and r > 0: {detail}")


# ---------------------------------------------------------------- A7

def test_a7_degenerate_equivalence():
    ds = generate(SyntheticSpec(n_points=3000, noise=0.25, seed=7))
    train = TrainingSet(ds)
    q = np.random.default_rng(707).uniform(-5, 5, size=(1000, 2))
    bad = 0
    for k in (1, 4, 15):
        cfg = AckerConfig("max_avg_comb", KRange([k]), 100)
        preds = acker_classify_batch(train, build_feature_index(train, cfg.kind, cfg.krange), q, cfg)
        bad += int(np.count_nonzero(np.array([p.predicted for p in preds]) != knn_predict(train, q, k)))
    kmax1 = sweep_kmax(ds, "max_dist", 100, [1], 10, 0)
    one_nn = sweep_fixed_k(ds, [1], 10, 0)
    same = kmax1.mean_acc == one_nn.mean_acc and kmax1.std_acc == one_nn.std_acc
    verdict("A7", bad == 0 and same,
            f"Range={{k}} vs kNN: {bad} differing predictions over 3x1000 queries; "
            f"k_max=1 equals 1-NN: {same}")


# ---------------------------------------------------------------- A8

A8_DATA = ["--synthetic", "noisy_dense_plus_sparse_checkerboard", "--n-points", "1500",
           "--noise", "0.25", "--synth-seed", "8", "--folds", "5", "--seed", "88"]
A8_COMMANDS = {
    "evaluate-knn": ["evaluate", "--method", "knn", "--k", "9"],
    "evaluate-acker": ["evaluate", "--range", "1..30", "--l", "50"],
    "sweep-fixed-k": ["sweep-fixed-k", "--ks", "1..30"],
    "sweep-l": ["sweep-l", "--range", "1..30", "--ls", "10,50,100"],
    "sweep-kmax": ["sweep-kmax", "--kmaxes", "1,10,30", "--l", "50"],
    "roc": ["roc", "--range", "1..30", "--ls", "10,50"],
    "roc-fixed-k": ["roc", "--ls", "10,50", "--fixed-k", "20"],
}


def test_a8_determinism_and_threads(tmp_path, capsys):
    differing = []
    for name, cmd in A8_COMMANDS.items():
        blobs = []
        for run, threads in enumerate(("1", "1", "8")):
            out = tmp_path / f"{name}-{run}.csv"
            code = cli_main(cmd + A8_DATA + ["--threads", threads, "--out", str(out)])
            assert code == 0, name
            blobs.append(out.read_bytes())
        if not blobs[0] == blobs[1] == blobs[2]:
            differing.append(name)
    capsys.readouterr()
    verdict("A8", not differing,
            f"{len(A8_COMMANDS)} CLI experiments x (rerun, --threads 8): "
            f"differing outputs {differing or 'none'}")


# ---------------------------------------------------------------- A9

def _latency(n, queries):
    ds = generate(SyntheticSpec(n_points=n, noise=0.25, seed=9))
    train = TrainingSet(ds)
    cfg = AckerConfig("max_avg_comb", KRange.upto(50), 100)
    fidx = build_feature_index(train, cfg.kind, cfg.krange)
    for p in queries[:20]:
        acker_classify(train, fidx, p, cfg)
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for p in queries:
            acker_classify(train, fidx, p, cfg)
        best = min(best, (time.perf_counter() - t0) / len(queries))
    return best


def test_a9_scaling():
    rng = np.random.default_rng(909)
    queries = [GeoPoint(*q) for q in rng.uniform(-5, 5, size=(200, 2))]
    small = _latency(10_000, queries)
    large = _latency(40_000, queries)
    ratio = large / small
    verdict("A9", ratio < 3.0,
            f"per-query latency 10k {small * 1e3:.3f} ms, 40k {large * 1e3:.3f} ms, "
            f"ratio {ratio:.2f} (limit 3)")


# ---------------------------------------------------------------- A10 (non-blocking)

def _env_dataset(var):
    path = os.environ.get(var)
    if not path or not Path(path).is_file():
        RESULTS.append(f"A10 SKIP  (non-blocking) {var} not set; dataset tier not run")
        pytest.skip(f"{var} not set to a readable CSV; dataset tier skipped")
    return load_csv(path)


def test_a10_crimes_best_k_is_large():
    ds = _env_dataset("GEOACKER_SFCRIMES_CSV")
    best_k, acc = sweep_fixed_k(ds, range(1, 101), 10, 0).best()
    RESULTS.append(f"A10 {'PASS' if best_k > 20 else 'FAIL'}  (non-blocking) "
                   f"crimes best fixed k={best_k} acc {acc:.4f}; expected > 20")


def test_a10_widenoise_accuracy_falls_with_k():
    ds = _env_dataset("GEOACKER_WIDENOISE_CSV")
    rep = sweep_fixed_k(ds, [1, 200], 10, 0)
    falls = rep.mean_acc[1] < rep.mean_acc[0]
    RESULTS.append(f"A10 {'PASS' if falls else 'FAIL'}  (non-blocking) widenoise acc k=1 "
                   f"{rep.mean_acc[0]:.4f} -> k=200 {rep.mean_acc[1]:.4f}")


# ---------------------------------------------------------------- baseline writer

def _spec_dict():
    return {"generator": A4_SPEC.kind, "n_points": A4_SPEC.n_points, "noise": A4_SPEC.noise,
            "data_seed": A4_SPEC.seed, "feature": A4_FEATURE, "range": repr(A4_RANGE),
            "ls": A4_LS, "folds": FOLDS, "fold_seed": SEED}


if __name__ == "__main__":
    if "--write-baseline" not in sys.argv:
        sys.exit("usage: python3 tests/test_acceptance.py --write-baseline")
    BASELINE.parent.mkdir(exist_ok=True)
    BASELINE.write_text(json.dumps({"spec": _spec_dict(), "numbers": _experiment_numbers()},
                                   indent=2) + "\n")
    print(f"wrote {BASELINE}")
