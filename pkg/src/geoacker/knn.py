"""Standard fixed-k nearest-neighbor classification and plain accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType
from typing import Sequence

import numpy as np

from .geo import Dataset, GeoPoint, ParameterError, as_coords
from .spatial import SpatialIndex


class TrainingSet:
    """A dataset plus the spatial index built over it; immutable."""

    def __init__(self, dataset: Dataset, backend: ModuleType | str | None = None) -> None:
        if len(dataset) == 0:
            raise ParameterError("training set must not be empty")
        self.dataset = dataset
        self.index = SpatialIndex(dataset, backend=backend)

    @property
    def backend(self) -> ModuleType:
        return self.index.backend

    @property
    def coords(self) -> np.ndarray:
        return self.dataset.coords

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.labels

    @property
    def n_classes(self) -> int:
        return self.dataset.n_classes

    def __len__(self) -> int:
        return len(self.dataset)


@dataclass(frozen=True)
class VoteResult:
    predicted: int
    counts: dict[int, int]
    tie: bool


def vote(neighbor_labels: Sequence[int]) -> VoteResult:
    """Majority class of an ordered (nearest first) label sequence.

    Among classes tied on count, the one whose closest member ranks first wins.
    """
    counts: dict[int, int] = {}
    first: dict[int, int] = {}
    for rank, c in enumerate(neighbor_labels):
        c = int(c)
        counts[c] = counts.get(c, 0) + 1
        first.setdefault(c, rank)
    if not counts:
        raise ParameterError("cannot vote over zero neighbors")
    top = max(counts.values())
    tied = [c for c, n in counts.items() if n == top]
    predicted = min(tied, key=lambda c: (first[c], c))
    return VoteResult(predicted, dict(sorted(counts.items())), len(tied) > 1)


def knn_classify(train: TrainingSet, p: GeoPoint, k: int,
                 exclude: int | None = None) -> VoteResult:
    idx, _ = train.index.query(as_coords(p), k,
                               exclude=None if exclude is None else [exclude])
    return vote(train.labels[idx[0]])


def knn_predict(train: TrainingSet, points: Sequence[GeoPoint] | np.ndarray,
                k: int) -> np.ndarray:
    """Vectorised ``knn_classify(...).predicted`` for many query points."""
    q = as_coords(points)
    if q.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    idx, _ = train.index.query(q, k)
    labels = np.ascontiguousarray(train.labels[idx])
    ks = np.array([k], dtype=np.int64)
    return train.backend.vote_predictions(labels, ks, train.n_classes)[:, 0]


def accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """Fraction of positions where prediction equals truth."""
    pred = np.asarray(predictions)
    true = np.asarray(truths)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ParameterError("predictions and truths must be equal-length sequences")
    if pred.size == 0:
        raise ParameterError("accuracy of an empty sequence is undefined")
    return float(np.count_nonzero(pred == true)) / pred.size
