"""Precomputed k-environment features of training points and their lookup indexes.

For every candidate k the feature of each training point (computed with the
point left out of its own neighborhood) is stored together with an index that
answers "which l training points have the most similar feature?" in
logarithmic time: a sorted array for 1-D features, a kd-tree for 2-D ones.
The leave-one-out correctness of standard kNN for every (point, k) is kept
alongside in a boolean table.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from types import ModuleType
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureKind, features_from_neighbors
from .geo import ParameterError
from .kernels import get_backend
from .knn import TrainingSet
from .spatial import KDTree

SNAPSHOT_VERSION = 1


class KRange:
    """Strictly increasing candidate values of k."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[int]) -> None:
        vals = np.array([int(v) for v in values], dtype=np.int64)
        if vals.size == 0:
            raise ParameterError("k range must not be empty")
        if vals[0] < 1:
            raise ParameterError("k values must be >= 1")
        if np.any(np.diff(vals) <= 0):
            raise ParameterError("k values must be strictly increasing")
        vals.setflags(write=False)
        self.values = vals

    @classmethod
    def upto(cls, k_max: int) -> "KRange":
        return cls(range(1, int(k_max) + 1))

    @classmethod
    def parse(cls, text: str) -> "KRange":
        """``"1..200"`` (contiguous) or ``"1,5,10,50"`` (explicit)."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
        try:
            if m:
                return cls(range(int(m.group(1)), int(m.group(2)) + 1))
            return cls(int(tok) for tok in text.split(",") if tok.strip())
        except ValueError as exc:
            raise ParameterError(f"bad k range {text!r}: {exc}") from None

    @property
    def k_max(self) -> int:
        return int(self.values[-1])

    def position(self, k: int) -> int:
        pos = int(np.searchsorted(self.values, k))
        if pos >= len(self.values) or self.values[pos] != k:
            raise ParameterError(f"k={k} is not in the candidate range")
        return pos

    def check(self, n_train: int) -> None:
        if self.k_max > n_train - 1:
            raise ParameterError(
                f"k_max={self.k_max} needs at least {self.k_max + 1} training points, "
                f"have {n_train}")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KRange) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(tuple(self.values.tolist()))

    def __repr__(self) -> str:
        v = self.values
        if len(v) > 1 and v[-1] - v[0] == len(v) - 1:
            return f"KRange({v[0]}..{v[-1]})"
        return f"KRange({v.tolist()})"


def loo_neighbors(train: TrainingSet, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Leave-one-out ``k_max``-NN of every training point: ``(indexes, distances)``."""
    n = len(train)
    return train.index.query(train.coords, k_max, exclude=np.arange(n, dtype=np.int64))


@dataclass(eq=False)
class FeatureIndexSet:
    kind: FeatureKind
    krange: KRange
    values: np.ndarray          # (slots, n) or (slots, n, 2)
    table: np.ndarray           # (n, len(krange)) bool
    backend: object = None

    def __post_init__(self) -> None:
        n = self.table.shape[0]
        slots = 1 if not self.kind.k_dependent else len(self.krange)
        expect = (slots, n) if self.kind.dim == 1 else (slots, n, 2)
        if self.values.shape != expect or self.table.shape != (n, len(self.krange)):
            raise ParameterError("feature values / table shape mismatch")
        self.values.setflags(write=False)
        self.table.setflags(write=False)
        self._backend = (self.backend if isinstance(self.backend, ModuleType)
                         else get_backend(self.backend))
        if self.kind.dim == 1:
            ids = np.arange(n, dtype=np.int64)
            # ascending by value, ties by point index
            self._order = [np.lexsort((ids, row)) for row in self.values]
            self._sorted = [np.ascontiguousarray(row[o]) for row, o in zip(self.values, self._order)]
            self._trees = None
        else:
            self._order = self._sorted = None
            self._trees = [KDTree(v, backend=self._backend) for v in self.values]

    @property
    def n_train(self) -> int:
        return self.table.shape[0]

    def slot(self, position: int) -> int:
        """Storage slot holding the features for ``krange.values[position]``."""
        return position if self.kind.k_dependent else 0

    def similar(self, position: int, query_features: np.ndarray, l: int) -> np.ndarray:
        """Batch lookup: ``(m, l)`` training indexes most similar per query.

        ``query_features`` is ``(m,)`` for 1-D kinds and ``(m, 2)`` for 2-D.
        """
        if not 1 <= l <= self.n_train:
            raise ParameterError(f"l={l} outside [1, {self.n_train}]")
        s = self.slot(position)
        if self.kind.dim == 1:
            q = np.ascontiguousarray(query_features, dtype=np.float64).reshape(-1)
            order = self._order[s]
            return self._backend.nearest_1d(self._sorted[s], order, q, int(l))
        q = np.ascontiguousarray(query_features, dtype=np.float64).reshape(-1, 2)
        idx, _ = self._trees[s].query(q, int(l))
        return idx

    def correct_counts(self, position: int, query_features: np.ndarray, l: int) -> np.ndarray:
        """Number of LOO-correct points among the ``l`` most similar, per query."""
        sim = self.similar(position, query_features, l)
        return self.table[:, position][sim].sum(axis=1)

    def restrict(self, k_max: int) -> "FeatureIndexSet":
        """A view limited to candidates ``<= k_max``; shares all arrays."""
        keep = int(np.searchsorted(self.krange.values, k_max, side="right"))
        if keep == 0:
            raise ParameterError(f"no candidate k <= {k_max}")
        if keep == len(self.krange):
            return self
        view = object.__new__(FeatureIndexSet)
        view.kind = self.kind
        view.krange = KRange(self.krange.values[:keep])
        view.table = self.table[:, :keep]
        view.backend = self.backend
        view._backend = self._backend
        if self.kind.k_dependent:
            view.values = self.values[:keep]
            view._order = self._order[:keep] if self._order is not None else None
            view._sorted = self._sorted[:keep] if self._sorted is not None else None
            view._trees = self._trees[:keep] if self._trees is not None else None
        else:
            view.values, view._order = self.values, self._order
            view._sorted, view._trees = self._sorted, self._trees
        return view

    # -- snapshot -----------------------------------------------------------

    def save(self, path: str | os.PathLike) -> None:
        """Write a versioned ``.npz`` snapshot; indexes are rebuilt on load."""
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, format_version=np.int64(SNAPSHOT_VERSION),
                         kind=np.array(self.kind.value), krange=self.krange.values,
                         values=self.values, table=self.table)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | os.PathLike, backend=None) -> "FeatureIndexSet":
        with np.load(path, allow_pickle=False) as z:
            version = int(z["format_version"])
            if version != SNAPSHOT_VERSION:
                raise ParameterError(f"unsupported snapshot version {version}")
            return cls(FeatureKind.parse(str(z["kind"])), KRange(z["krange"]),
                       np.array(z["values"]), np.array(z["table"]), backend=backend)


def correctness_table(train: TrainingSet, nbr_idx: np.ndarray,
                      krange: KRange) -> np.ndarray:
    """``table[i, j]``: LOO kNN at ``krange[j]`` classifies point ``i`` correctly."""
    labels = np.ascontiguousarray(train.labels[nbr_idx])
    pred = train.backend.vote_predictions(labels, krange.values, train.n_classes)
    return pred == train.labels[:, None]


def build_feature_index(train: TrainingSet, kind: FeatureKind | str,
                        krange: KRange | Sequence[int]) -> FeatureIndexSet:
    """One LOO neighbor pass of ``k_max`` per point fills every k slot."""
    kind = FeatureKind.parse(kind)
    if not isinstance(krange, KRange):
        krange = KRange(krange)
    krange.check(len(train))
    nbr_idx, nbr_dist = loo_neighbors(train, krange.k_max)
    table = correctness_table(train, nbr_idx, krange)
    values = features_from_neighbors(kind, train.coords, nbr_dist, krange.values)
    return FeatureIndexSet(kind, krange, values, table, backend=train.backend)


def most_similar(index: FeatureIndexSet, k: int, query_feature: Sequence[float],
                 l: int) -> list[int]:
    """The ``l`` training points whose feature at ``k`` is closest to ``query_feature``.

    Ties in similarity go to the lower point index.
    """
    pos = index.krange.position(k)
    q = np.asarray(query_feature, dtype=np.float64).reshape(1, -1)
    if q.shape[1] != index.kind.dim:
        raise ParameterError(f"{index.kind} expects {index.kind.dim}-D features")
    return index.similar(pos, q if index.kind.dim == 2 else q[:, 0], l)[0].tolist()
