"""Cross-validation, score-quality metrics and parameter sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .acker import AckerConfig, acker_classify_batch, score_matrix
from .feature_index import FeatureIndexSet, KRange, build_feature_index
from .features import FeatureKind
from .geo import Dataset, ParameterError
from .knn import TrainingSet


@dataclass(frozen=True)
class StandardKnn:
    k: int


@dataclass(frozen=True)
class Acker:
    config: AckerConfig


class FoldPlan:
    """Seeded partition of ``range(n)`` into folds whose sizes differ by at most one."""

    def __init__(self, n: int, folds: int = 10, seed: int = 0) -> None:
        if folds < 2:
            raise ParameterError("need at least 2 folds")
        if n < folds:
            raise ParameterError(f"{n} points cannot be split into {folds} folds")
        self.n, self.n_folds, self.seed = n, folds, seed
        self.permutation = np.random.default_rng(seed).permutation(n)
        self.test_sets = [np.sort(part) for part in np.array_split(self.permutation, folds)]

    def __iter__(self):
        for f, test in enumerate(self.test_sets):
            mask = np.ones(self.n, dtype=bool)
            mask[test] = False
            yield f, np.flatnonzero(mask), test

    def __len__(self) -> int:
        return self.n_folds


@dataclass(frozen=True)
class EvalRecord:
    index: int
    fold: int
    truth: int
    predicted: int
    chosen_k: int | None = None
    score: float | None = None

    @property
    def correct(self) -> bool:
        return self.truth == self.predicted


class CVResult(NamedTuple):
    mean: float
    std: float
    records: list[EvalRecord]
    fold_accuracies: tuple[float, ...]


def _fold_split(dataset: Dataset, train_idx: np.ndarray, test_idx: np.ndarray,
                backend=None) -> tuple[TrainingSet, Dataset]:
    # the training side only ever sees its own rows
    return TrainingSet(dataset.subset(train_idx), backend=backend), dataset.subset(test_idx)


def _check_size(plan: FoldPlan, needed: int) -> None:
    smallest = plan.n - max(len(t) for t in plan.test_sets)
    if smallest < needed:
        raise ParameterError(
            f"folds leave only {smallest} training points; need {needed}")


def _summary(accs: list[float]) -> tuple[float, float]:
    a = np.asarray(accs, dtype=np.float64)
    return float(a.mean()), float(a.std())


def run_cv(dataset: Dataset, method: StandardKnn | Acker, folds: int = 10, seed: int = 0,
           workers: int = 1, backend=None) -> CVResult:
    """Per fold: index the training side, classify the test side, score accuracy.

    Returns the mean and population standard deviation of the fold accuracies
    together with one record per test point.
    """
    plan = FoldPlan(len(dataset), folds, seed)
    if isinstance(method, StandardKnn):
        _check_size(plan, method.k)
    else:
        _check_size(plan, max(method.config.krange.k_max + 1, method.config.l))
    records: list[EvalRecord] = []
    accs = []
    for f, tr, te in plan:
        train, test = _fold_split(dataset, tr, te, backend)
        if isinstance(method, StandardKnn):
            idx, _ = train.index.query(test.coords, method.k)
            pred = train.backend.vote_predictions(
                np.ascontiguousarray(train.labels[idx]),
                np.array([method.k], dtype=np.int64), train.n_classes)[:, 0]
            recs = [EvalRecord(int(i), f, int(t), int(p))
                    for i, t, p in zip(te, test.labels, pred)]
        else:
            cfg = method.config
            fidx = build_feature_index(train, cfg.kind, cfg.krange)
            preds = acker_classify_batch(train, fidx, test.coords, cfg, workers=workers)
            recs = [EvalRecord(int(i), f, int(t), p.predicted, p.chosen_k, p.expected_accuracy)
                    for i, t, p in zip(te, test.labels, preds)]
        records.extend(recs)
        accs.append(sum(r.correct for r in recs) / len(recs))
    mean, std = _summary(accs)
    return CVResult(mean, std, records, tuple(accs))


# ---------------------------------------------------------------- metrics

def pearson_r(scores: Sequence[float], correct: Sequence[int]) -> float | None:
    """Pearson correlation of scores with a 0/1 outcome; ``None`` if either side is constant."""
    x = np.asarray(scores, dtype=np.float64)
    y = np.asarray(correct, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ParameterError("need two equal-length sequences of at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def roc_auc(scores: Sequence[float], correct: Sequence[int]) -> float | None:
    """Probability that a correct point outscores an incorrect one, ties counting half.

    Computed from mid-ranks (Mann-Whitney U) in exact integer arithmetic.
    ``None`` when only one outcome is present.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(correct).astype(bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ParameterError("scores and outcomes must be equal-length sequences")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    # doubled mid-rank of each tie group: 2*start + count + 1
    twice_rank = (2 * starts + counts + 1).astype(np.int64)
    r2 = int(twice_rank[inverse[y]].sum())
    u2 = r2 - n_pos * (n_pos + 1)
    return u2 / (2 * n_pos * n_neg)


# ---------------------------------------------------------------- reports

@dataclass
class SweepReport:
    experiment: str
    parameter: str
    values: list[int]
    mean_acc: list[float]
    std_acc: list[float]
    pearson: list[float | None] = field(default_factory=list)
    auc: list[float | None] = field(default_factory=list)
    folds: int = 10
    seed: int = 0

    COLUMNS = ("value", "mean_acc", "std_acc", "pearson_r", "roc_auc")

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ParameterError("swept values must be strictly increasing")
        n = len(self.values)
        self.pearson = list(self.pearson) or [None] * n
        self.auc = list(self.auc) or [None] * n
        if not (len(self.mean_acc) == len(self.std_acc) == len(self.pearson)
                == len(self.auc) == n):
            raise ParameterError("report columns differ in length")

    def rows(self):
        return zip(self.values, self.mean_acc, self.std_acc, self.pearson, self.auc)

    def best(self) -> tuple[int, float]:
        i = int(np.argmax(self.mean_acc))
        return self.values[i], self.mean_acc[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        fmt = lambda v: "" if v is None else repr(float(v))
        for v, m, s, r, a in self.rows():
            w.writerow([int(v), fmt(m), fmt(s), fmt(r), fmt(a)])
        return buf.getvalue()

    def to_text(self) -> str:
        fmt = lambda v: "-" if v is None else f"{v:.6f}"
        lines = [
            f"experiment: {self.experiment}",
            f"parameter: {self.parameter}",
            f"folds: {self.folds}",
            f"seed: {self.seed}",
            "",
            f"{self.parameter:>8} {'mean_acc':>10} {'std_acc':>10} {'pearson_r':>10} {'roc_auc':>10}",
        ]
        for v, m, s, r, a in self.rows():
            lines.append(f"{v:>8} {fmt(m):>10} {fmt(s):>10} {fmt(r):>10} {fmt(a):>10}")
        best_v, best_acc = self.best()
        lines += ["", f"best {self.parameter}={best_v} mean_acc={best_acc:.6f}"]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "text":
            return self.to_text()
        raise ParameterError(f"unknown report format {fmt!r}")

    @classmethod
    def from_csv(cls, text: str, experiment: str = "", parameter: str = "value") -> "SweepReport":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != cls.COLUMNS:
            raise ParameterError("not a sweep report")
        opt = lambda v: None if v == "" else float(v)
        body = rows[1:]
        return cls(experiment, parameter, [int(r[0]) for r in body],
                   [float(r[1]) for r in body], [float(r[2]) for r in body],
                   [opt(r[3]) for r in body], [opt(r[4]) for r in body])


# ---------------------------------------------------------------- sweeps

def _sorted_unique(values: Sequence[int], what: str) -> list[int]:
    vals = sorted({int(v) for v in values})
    if not vals:
        raise ParameterError(f"no {what} values to sweep")
    if vals[0] < 1:
        raise ParameterError(f"{what} values must be >= 1")
    return vals


def sweep_fixed_k(dataset: Dataset, ks: Sequence[int], folds: int = 10, seed: int = 0,
                  backend=None) -> SweepReport:
    """Standard kNN accuracy per k over one shared fold plan."""
    ks = _sorted_unique(ks, "k")
    plan = FoldPlan(len(dataset), folds, seed)
    _check_size(plan, ks[-1])
    karr = np.array(ks, dtype=np.int64)
    per_fold = []
    for f, tr, te in plan:
        train, test = _fold_split(dataset, tr, te, backend)
        idx, _ = train.index.query(test.coords, ks[-1])
        pred = train.backend.vote_predictions(
            np.ascontiguousarray(train.labels[idx]), karr, train.n_classes)
        per_fold.append((pred == test.labels[:, None]).mean(axis=0))
    acc = np.array(per_fold)
    return SweepReport("fixed_k", "k", ks, [float(v) for v in acc.mean(axis=0)],
                       [float(v) for v in acc.std(axis=0)], folds=folds, seed=seed)


def _acker_l_records(train: TrainingSet, test: Dataset, te: np.ndarray, f: int,
                     fidx: FeatureIndexSet, l: int, workers: int) -> list[EvalRecord]:
    cfg = AckerConfig(fidx.kind, fidx.krange, l)
    preds = acker_classify_batch(train, fidx, test.coords, cfg, workers=workers)
    return [EvalRecord(int(i), f, int(t), p.predicted, p.chosen_k, p.expected_accuracy)
            for i, t, p in zip(te, test.labels, preds)]


def _fixed_k_l_records(train: TrainingSet, test: Dataset, te: np.ndarray, f: int,
                       fidx: FeatureIndexSet, l: int) -> list[EvalRecord]:
    # score = expected accuracy of standard kNN at the single candidate k
    k = int(fidx.krange.values[0])
    counts, nbr_idx = score_matrix(train, fidx, test.coords, l)
    pred = train.backend.vote_predictions(
        np.ascontiguousarray(train.labels[nbr_idx]), fidx.krange.values,
        train.n_classes)[:, 0]
    return [EvalRecord(int(i), f, int(t), int(p), k, int(c) / l)
            for i, t, p, c in zip(te, test.labels, pred, counts[:, 0])]


def _report_from_records(experiment: str, parameter: str, values: list[int],
                         per_value: dict[int, list[list[EvalRecord]]],
                         folds: int, seed: int) -> SweepReport:
    means, stds, rs, aucs = [], [], [], []
    for v in values:
        fold_recs = per_value[v]
        m, s = _summary([sum(r.correct for r in recs) / len(recs) for recs in fold_recs])
        pooled = [r for recs in fold_recs for r in recs]
        scores = [r.score for r in pooled]
        outcome = [int(r.correct) for r in pooled]
        means.append(m)
        stds.append(s)
        rs.append(pearson_r(scores, outcome))
        aucs.append(roc_auc(scores, outcome))
    return SweepReport(experiment, parameter, values, means, stds, rs, aucs,
                       folds=folds, seed=seed)


def sweep_l(dataset: Dataset, kind: FeatureKind | str, krange: KRange | Sequence[int],
            ls: Sequence[int], folds: int = 10, seed: int = 0, workers: int = 1,
            backend=None, experiment: str = "l_sweep") -> SweepReport:
    """ACKER accuracy, score correlation and ROC AUC per l.

    The feature index is built once per fold and shared by every l.
    """
    kind = FeatureKind.parse(kind)
    krange = krange if isinstance(krange, KRange) else KRange(krange)
    ls = _sorted_unique(ls, "l")
    plan = FoldPlan(len(dataset), folds, seed)
    _check_size(plan, max(krange.k_max + 1, ls[-1]))
    per_l: dict[int, list[list[EvalRecord]]] = {l: [] for l in ls}
    for f, tr, te in plan:
        train, test = _fold_split(dataset, tr, te, backend)
        fidx = build_feature_index(train, kind, krange)
        for l in ls:
            per_l[l].append(_acker_l_records(train, test, te, f, fidx, l, workers))
    return _report_from_records(experiment, "l", ls, per_l, folds, seed)


def sweep_roc(dataset: Dataset, kind: FeatureKind | str, krange: KRange | Sequence[int],
              ls: Sequence[int], folds: int = 10, seed: int = 0,
              fixed_k: int | None = None, workers: int = 1, backend=None) -> SweepReport:
    """Score quality per l.

    Without ``fixed_k`` this is the ACKER sweep (score = the chosen k's
    expected accuracy). With ``fixed_k`` the classifier is standard kNN at
    that k and the score is its expected accuracy at the same k.
    """
    if fixed_k is None:
        return sweep_l(dataset, kind, krange, ls, folds, seed, workers, backend,
                       experiment="roc")
    kind = FeatureKind.parse(kind)
    krange = KRange([fixed_k])
    ls = _sorted_unique(ls, "l")
    plan = FoldPlan(len(dataset), folds, seed)
    _check_size(plan, max(fixed_k + 1, ls[-1]))
    per_l: dict[int, list[list[EvalRecord]]] = {l: [] for l in ls}
    for f, tr, te in plan:
        train, test = _fold_split(dataset, tr, te, backend)
        fidx = build_feature_index(train, kind, krange)
        for l in ls:
            per_l[l].append(_fixed_k_l_records(train, test, te, f, fidx, l))
    return _report_from_records("roc", "l", ls, per_l, folds, seed)


def sweep_kmax(dataset: Dataset, kind: FeatureKind | str, l: int, kmaxes: Sequence[int],
               folds: int = 10, seed: int = 0, workers: int = 1,
               backend=None) -> SweepReport:
    """ACKER accuracy with candidates ``{1..k_max}`` for each k_max.

    One feature index over the largest k_max serves every smaller range.
    """
    kind = FeatureKind.parse(kind)
    kmaxes = _sorted_unique(kmaxes, "k_max")
    plan = FoldPlan(len(dataset), folds, seed)
    _check_size(plan, max(kmaxes[-1] + 1, l))
    per_k: dict[int, list[list[EvalRecord]]] = {k: [] for k in kmaxes}
    for f, tr, te in plan:
        train, test = _fold_split(dataset, tr, te, backend)
        full = build_feature_index(train, kind, KRange.upto(kmaxes[-1]))
        for km in kmaxes:
            per_k[km].append(_acker_l_records(train, test, te, f, full.restrict(km), l, workers))
    return _report_from_records("kmax_sweep", "k_max", kmaxes, per_k, folds, seed)
