from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_dataset
from geoacker import (Acker, AckerConfig, FoldPlan, KRange, ParameterError,
                      StandardKnn, SweepReport, SyntheticSpec, TrainingSet,
                      acker_classify_batch, build_feature_index, generate,
                      pearson_r, roc_auc, run_cv, sweep_fixed_k, sweep_kmax, sweep_l,
                      sweep_roc)

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def halves():
    return generate(SyntheticSpec("separable_halves", n_points=400, seed=3))


@pytest.fixture(scope="module")
def two_regime():
    return generate(SyntheticSpec(n_points=1500, noise=0.25, seed=1))


class TestFoldPlan:
    @pytest.mark.parametrize("n, folds", [(10, 10), (103, 10), (57, 4)])
    def test_partition(self, n, folds):
        plan = FoldPlan(n, folds, seed=5)
        tests = [te for _, _, te in plan]
        assert sorted(np.concatenate(tests).tolist()) == list(range(n))
        sizes = [len(t) for t in tests]
        assert max(sizes) - min(sizes) <= 1
        for _, tr, te in plan:
            assert not set(tr) & set(te)
            assert len(tr) + len(te) == n

    def test_deterministic(self):
        a = [te.tolist() for _, _, te in FoldPlan(200, 10, 9)]
        assert a == [te.tolist() for _, _, te in FoldPlan(200, 10, 9)]
        assert a != [te.tolist() for _, _, te in FoldPlan(200, 10, 10)]

    def test_invalid(self):
        with pytest.raises(ParameterError):
            FoldPlan(5, 10)


class TestRunCv:
    def test_separable_knn(self, halves):
        res = run_cv(halves, StandardKnn(1))
        assert res.mean == 1.0 and res.std == 0.0
        assert res.fold_accuracies == (1.0,) * 10

    def test_separable_acker_matches_fixed_k(self, halves):
        cfg = AckerConfig("max_dist", KRange.upto(5), 20)
        res = run_cv(halves, Acker(cfg))
        assert res.mean == 1.0
        for k in range(1, 6):
            assert run_cv(halves, StandardKnn(k)).mean == 1.0

    def test_random_labels_near_chance(self):
        ds = generate(SyntheticSpec("uniform_random_labels", n_points=3000, n_classes=3, seed=4))
        res = run_cv(ds, StandardKnn(5), seed=4)
        assert abs(res.mean - 1 / 3) <= 0.05

    def test_records_cover_every_point_once(self, two_regime):
        res = run_cv(two_regime, StandardKnn(3), folds=5)
        assert sorted(r.index for r in res.records) == list(range(len(two_regime)))
        folds = np.array(res.fold_accuracies)
        assert res.mean == pytest.approx(folds.mean(), abs=1e-15)
        assert res.std == pytest.approx(np.sqrt(((folds - folds.mean()) ** 2).mean()), abs=1e-15)

    def test_fold_uses_only_training_side(self, two_regime):
        # recompute fold 0 by hand from the train subset alone
        cfg = AckerConfig("max_dist", KRange.upto(8), 25)
        res = run_cv(two_regime, Acker(cfg), folds=5, seed=2)
        _, tr, te = next(iter(FoldPlan(len(two_regime), 5, 2)))
        train = TrainingSet(two_regime.subset(tr))
        fidx = build_feature_index(train, "max_dist", cfg.krange)
        preds = acker_classify_batch(train, fidx, two_regime.coords[te], cfg)
        got = [r for r in res.records if r.fold == 0]
        assert [r.predicted for r in got] == [p.predicted for p in preds]
        assert [r.score for r in got] == [p.expected_accuracy for p in preds]

    def test_insufficient_data(self):
        ds = random_dataset(30)
        with pytest.raises(ParameterError):
            run_cv(ds, Acker(AckerConfig("max_dist", KRange.upto(27), 5)))


class TestPearson:
    def test_perfect(self):
        assert pearson_r([1, 1, 0, 0], [1, 1, 0, 0]) == 1.0
        assert pearson_r([0, 0, 1, 1], [1, 1, 0, 0]) == -1.0

    def test_constant_is_undefined(self):
        assert pearson_r([0.5, 0.5, 0.5], [1, 0, 1]) is None
        assert pearson_r([0.1, 0.5, 0.9], [1, 1, 1]) is None

    def test_matches_two_pass_formula(self):
        rng = np.random.default_rng(0)
        s = rng.random(1000)
        c = (rng.random(1000) < s).astype(int)
        assert abs(pearson_r(s, c) - oracles.two_pass_pearson(s.tolist(), c.tolist())) <= 1e-12

    @settings(max_examples=40)
    @given(st.lists(st.tuples(st.integers(0, 20), st.booleans()), min_size=3, max_size=80),
           st.integers(1, 50), st.integers(-50, 50))
    def test_affine_invariance(self, pairs, a, b):
        s = [v / 20 for v, _ in pairs]
        c = [int(y) for _, y in pairs]
        r = pearson_r(s, c)
        r2 = pearson_r([a * v + b for v in s], c)
        if r is None:
            assert r2 is None
        else:
            assert r2 == pytest.approx(r, abs=1e-9)


class TestRocAuc:
    def test_examples(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
        assert roc_auc([0.4] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
        assert roc_auc([0.3, 0.3], [1, 1]) is None

    def test_matches_pairwise_oracle_with_ties(self):
        rng = np.random.default_rng(1)
        s = rng.integers(0, 20, 500) / 20
        c = rng.integers(0, 2, 500)
        assert roc_auc(s, c) == oracles.pairwise_auc(s.tolist(), c.tolist())

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(0, 30), st.booleans()), min_size=2, max_size=60))
    def test_oracle_and_transforms(self, pairs):
        s = [v / 30 for v, _ in pairs]
        c = [int(y) for _, y in pairs]
        auc = roc_auc(s, c)
        if auc is None:
            assert len(set(c)) == 1
            return
        assert auc == oracles.pairwise_auc(s, c)
        assert roc_auc([v ** 3 + 2 for v in s], c) == auc
        if len(set(s)) == len(s):
            assert auc + roc_auc([-v for v in s], c) == 1.0


class TestSweeps:
    def test_fixed_k_single_value_equals_run_cv(self, two_regime):
        rep = sweep_fixed_k(two_regime, [4], folds=5, seed=3)
        res = run_cv(two_regime, StandardKnn(4), folds=5, seed=3)
        assert rep.values == [4]
        assert (rep.mean_acc[0], rep.std_acc[0]) == (res.mean, res.std)

    def test_fixed_k_every_value_equals_run_cv(self, two_regime):
        ks = [1, 3, 10, 25]
        rep = sweep_fixed_k(two_regime, ks, folds=5, seed=1)
        for k, m, s in zip(ks, rep.mean_acc, rep.std_acc):
            res = run_cv(two_regime, StandardKnn(k), folds=5, seed=1)
            assert (m, s) == (res.mean, res.std)

    def test_fixed_k_separable(self, halves):
        rep = sweep_fixed_k(halves, [1])
        assert rep.values == [1] and rep.mean_acc == [1.0]

    def test_noisy_dense_prefers_larger_k(self):
        ds = generate(SyntheticSpec(n_points=2000, noise=0.25, dense_fraction=0.95, seed=2))
        rep = sweep_fixed_k(ds, [1, 15], folds=5)
        assert rep.mean_acc[1] > rep.mean_acc[0]
        assert rep.mean_acc[1] == run_cv(ds, StandardKnn(15), folds=5).mean

    def test_l_sweep_equals_run_cv_per_l(self, two_regime):
        rep = sweep_l(two_regime, "max_dist", KRange.upto(10), [5, 40], folds=5, seed=6)
        for l, m, s, r, a in rep.rows():
            res = run_cv(two_regime, Acker(AckerConfig("max_dist", KRange.upto(10), l)),
                         folds=5, seed=6)
            assert (m, s) == (res.mean, res.std)
            scores = [x.score for x in res.records]
            outcome = [int(x.correct) for x in res.records]
            assert r == pearson_r(scores, outcome)
            assert a == roc_auc(scores, outcome)

    def test_l_sweep_shared_value_reproducible(self, two_regime):
        a = sweep_l(two_regime, "avg_dist", KRange.upto(6), [5, 20], folds=5, seed=1)
        b = sweep_l(two_regime, "avg_dist", KRange.upto(6), [20, 60], folds=5, seed=1)
        assert a.mean_acc[1] == b.mean_acc[0]

    def test_l_equals_training_size(self):
        ds = random_dataset(100, seed=3)
        rep = sweep_l(ds, "max_dist", KRange.upto(3), [90], folds=10)
        assert 0.0 <= rep.mean_acc[0] <= 1.0

    def test_kmax_one_is_one_nn(self, two_regime):
        rep = sweep_kmax(two_regime, "max_dist", 30, [1, 2], folds=5, seed=0)
        assert rep.mean_acc[0] == run_cv(two_regime, StandardKnn(1), folds=5).mean
        direct = run_cv(two_regime, Acker(AckerConfig("max_dist", KRange.upto(2), 30)), folds=5)
        assert rep.mean_acc[1] == direct.mean

    def test_roc_fixed_k(self, two_regime):
        rep = sweep_roc(two_regime, "max_dist", KRange.upto(5), [20], folds=5, fixed_k=7)
        assert rep.mean_acc[0] == run_cv(two_regime, StandardKnn(7), folds=5).mean
        assert rep.auc[0] is not None

    def test_reports_are_reproducible(self, two_regime):
        args = (two_regime, "max_avg_comb", KRange.upto(8), [10, 30])
        assert sweep_l(*args, folds=5, seed=4).to_csv() == sweep_l(*args, folds=5, seed=4).to_csv()


class TestSweepReport:
    def _report(self):
        return SweepReport("l_sweep", "l", [10, 50], [0.75, 0.8], [0.125, 0.1],
                           [0.5, None], [0.625, None], folds=10, seed=7)

    def test_csv_golden(self):
        assert self._report().to_csv() == (GOLDEN / "report.csv").read_text()

    def test_text_golden(self):
        assert self._report().render("text") == (GOLDEN / "report.txt").read_text()

    def test_csv_round_trip(self):
        rep = self._report()
        back = SweepReport.from_csv(rep.to_csv(), "l_sweep", "l")
        assert list(back.rows()) == list(rep.rows())

    def test_values_must_increase(self):
        with pytest.raises(ParameterError):
            SweepReport("fixed_k", "k", [3, 2], [0.1, 0.2], [0.0, 0.0])
