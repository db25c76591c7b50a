"""Adaptive kNN: choose k per point by maximising expected accuracy.

The expected accuracy of k for a query point is the leave-one-out accuracy of
standard kNN at k over the ``l`` training points whose k-environment feature is
closest to the query's. The first (smallest) k reaching the maximum wins and
the point is then classified by standard kNN with that k.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .feature_index import FeatureIndexSet, KRange, build_feature_index
from .features import FeatureKind, features_from_neighbors
from .geo import Dataset, GeoPoint, ParameterError, as_coords
from .knn import TrainingSet

# queries per worker task in batch classification
CHUNK = 256


@dataclass(frozen=True)
class AckerConfig:
    kind: FeatureKind
    krange: KRange
    l: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FeatureKind.parse(self.kind))
        if not isinstance(self.krange, KRange):
            object.__setattr__(self, "krange", KRange(self.krange))
        if int(self.l) < 1:
            raise ParameterError("l must be >= 1")
        object.__setattr__(self, "l", int(self.l))

    def check(self, n_train: int) -> None:
        self.krange.check(n_train)
        if self.l > n_train:
            raise ParameterError(f"l={self.l} exceeds the training size {n_train}")


@dataclass(frozen=True)
class Prediction:
    predicted: int
    chosen_k: int
    expected_accuracy: float
    per_k_scores: tuple[tuple[int, float], ...] | None = None


def _check_index(fidx: FeatureIndexSet, train: TrainingSet, config: AckerConfig) -> None:
    if fidx.kind is not config.kind or fidx.krange != config.krange:
        raise ParameterError(
            f"feature index ({fidx.kind}, {fidx.krange!r}) does not match "
            f"config ({config.kind}, {config.krange!r})")
    if fidx.n_train != len(train):
        raise ParameterError("feature index was built over a different training set")
    config.check(len(train))


def _query_features(train: TrainingSet, fidx: FeatureIndexSet,
                    q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor indexes (m, k_max) and per-slot features of external query points."""
    nbr_idx, nbr_dist = train.index.query(q, fidx.krange.k_max)
    feats = features_from_neighbors(fidx.kind, q, nbr_dist, fidx.krange.values)
    return nbr_idx, feats


def score_matrix(train: TrainingSet, fidx: FeatureIndexSet, q: np.ndarray,
                 l: int) -> tuple[np.ndarray, np.ndarray]:
    """Correct-count matrix ``(m, |range|)`` plus the queries' neighbor indexes.

    Dividing the counts by ``l`` gives the expected accuracies.
    """
    nbr_idx, feats = _query_features(train, fidx, q)
    counts = np.empty((q.shape[0], len(fidx.krange)), dtype=np.int64)
    for pos in range(len(fidx.krange)):
        counts[:, pos] = fidx.correct_counts(pos, feats[fidx.slot(pos)], l)
    return counts, nbr_idx


def expected_accuracy(train: TrainingSet, fidx: FeatureIndexSet, p: GeoPoint,
                      k: int, l: int) -> float:
    """Leave-one-out kNN accuracy at ``k`` over the ``l`` training points most similar to ``p``."""
    pos = fidx.krange.position(k)
    if not 1 <= l <= len(train):
        raise ParameterError(f"l={l} outside [1, {len(train)}]")
    q = as_coords(p)
    _, feats = _query_features(train, fidx.restrict(int(fidx.krange.values[pos])), q)
    count = fidx.correct_counts(pos, feats[fidx.slot(pos)], l)[0]
    return int(count) / l


def _classify_chunk(train: TrainingSet, fidx: FeatureIndexSet, q: np.ndarray,
                    l: int, keep_scores: bool) -> list[Prediction]:
    counts, nbr_idx = score_matrix(train, fidx, q, l)
    # argmax returns the first maximum: the smallest k wins ties
    best = np.argmax(counts, axis=1)
    labels = np.ascontiguousarray(train.labels[nbr_idx])
    votes = train.backend.vote_predictions(labels, fidx.krange.values, train.n_classes)
    ks = fidx.krange.values
    out = []
    for i, pos in enumerate(best.tolist()):
        scores = None
        if keep_scores:
            scores = tuple((int(k), int(c) / l) for k, c in zip(ks, counts[i]))
        out.append(Prediction(int(votes[i, pos]), int(ks[pos]),
                              int(counts[i, pos]) / l, scores))
    return out


def acker_classify_batch(train: TrainingSet, fidx: FeatureIndexSet,
                         points: Sequence[GeoPoint] | np.ndarray, config: AckerConfig,
                         keep_scores: bool = False, workers: int = 1) -> list[Prediction]:
    """Classify many points; output order equals input order for any ``workers``."""
    _check_index(fidx, train, config)
    q = as_coords(points) if len(points) else np.empty((0, 2))
    if q.shape[0] == 0:
        return []
    chunks = [q[s:s + CHUNK] for s in range(0, q.shape[0], CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_classify_chunk(train, fidx, c, config.l, keep_scores) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda c: _classify_chunk(train, fidx, c, config.l, keep_scores), chunks))
    return [p for part in parts for p in part]


def acker_classify(train: TrainingSet, fidx: FeatureIndexSet, p: GeoPoint,
                   config: AckerConfig, keep_scores: bool = False) -> Prediction:
    return acker_classify_batch(train, fidx, [p], config, keep_scores)[0]


class AckerClassifier:
    """Fit/predict convenience wrapper around the functional API."""

    def __init__(self, kind: FeatureKind | str = FeatureKind.MAX_AVG_COMB,
                 krange: KRange | Sequence[int] | str = "1..50", l: int = 100,
                 workers: int = 1, backend=None) -> None:
        if isinstance(krange, str):
            krange = KRange.parse(krange)
        self.config = AckerConfig(FeatureKind.parse(kind), krange, l)
        self.workers = workers
        self.backend = backend
        self.train_: TrainingSet | None = None
        self.index_: FeatureIndexSet | None = None

    def fit(self, dataset: Dataset) -> "AckerClassifier":
        self.config.check(len(dataset))
        self.train_ = TrainingSet(dataset, backend=self.backend)
        self.index_ = build_feature_index(self.train_, self.config.kind, self.config.krange)
        return self

    def predict_full(self, points, keep_scores: bool = False) -> list[Prediction]:
        if self.train_ is None:
            raise RuntimeError("call fit() first")
        return acker_classify_batch(self.train_, self.index_, points, self.config,
                                    keep_scores=keep_scores, workers=self.workers)

    def predict(self, points) -> np.ndarray:
        return np.array([p.predicted for p in self.predict_full(points)], dtype=np.int64)
