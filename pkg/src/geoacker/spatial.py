"""Exact k-nearest-neighbor search over 2-D points with a static kd-tree."""

from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType
from typing import Sequence

import numpy as np

from .geo import Dataset, GeoPoint, ParameterError, as_coords
from .kernels import get_backend

LEAFSIZE = 16


@dataclass(frozen=True)
class NeighborList:
    """Neighbors ordered by ascending distance, ties by ascending point index."""

    indexes: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indexes)

    def __iter__(self):
        return iter(zip(self.indexes.tolist(), self.distances.tolist()))


class KDTree:
    """Static kd-tree over an ``(n, 2)`` array.

    Leaves store point indexes; internal nodes keep bounding boxes so that
    pruning is exact and never drops an equal-distance candidate.
    """

    def __init__(self, points: np.ndarray, leafsize: int = LEAFSIZE,
                 backend: ModuleType | str | None = None) -> None:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if pts.flags.writeable or not pts.flags.c_contiguous:
            pts = np.array(pts, order="C")
        if pts.shape[0] == 0:
            raise ParameterError("cannot build a kd-tree over zero points")
        if leafsize < 1:
            raise ParameterError("leafsize must be >= 1")
        if not isinstance(backend, ModuleType):
            backend = get_backend(backend)
        self.backend = backend
        self.points = pts
        self.points.setflags(write=False)
        self._arrays = backend.build_tree(pts, int(leafsize))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def query(self, queries: np.ndarray, k: int,
              exclude: np.ndarray | Sequence[int] | int | None = None,
              clamp: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Batch k-NN: returns ``(indexes, distances)``, each shaped ``(m, k)``.

        ``exclude`` names one point index per query (or -1 for none) that is
        skipped. With ``clamp`` a too-large ``k`` is reduced to the available
        number of points instead of raising.
        """
        q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 2)
        m = q.shape[0]
        if exclude is None:
            excl = np.full(m, -1, dtype=np.int64)
        else:
            excl = np.ascontiguousarray(
                np.broadcast_to(np.asarray(exclude, dtype=np.int64), (m,)))
        k = int(k)
        available = self.size - (1 if exclude is not None else 0)
        if clamp:
            k = min(k, available)
        if k < 1 or k > available:
            raise ParameterError(f"k={k} outside [1, {available}]")
        return self.backend.knn_query(self.points, *self._arrays, q, k, excl)


class SpatialIndex(KDTree):
    """kd-tree over a dataset's ``(lon, lat)`` coordinates."""

    def __init__(self, dataset: Dataset, leafsize: int = LEAFSIZE,
                 backend: ModuleType | str | None = None) -> None:
        if len(dataset) == 0:
            raise ParameterError("cannot index an empty dataset")
        super().__init__(dataset.coords, leafsize=leafsize, backend=backend)
        self.dataset = dataset


def build(dataset: Dataset, backend: ModuleType | str | None = None) -> SpatialIndex:
    return SpatialIndex(dataset, backend=backend)


def k_nearest(index: KDTree, query: GeoPoint, k: int,
              exclude: int | None = None, clamp: bool = False) -> NeighborList:
    """The ``k`` indexed points closest to ``query``."""
    idx, dist = index.query(as_coords(query), k,
                            exclude=None if exclude is None else [exclude],
                            clamp=clamp)
    return NeighborList(idx[0], dist[0])
