"""Features describing a point's k-environment and the similarity built on them."""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from .geo import GeoPoint, ParameterError, as_coords


class FeatureKind(enum.Enum):
    AVG_DIST = "avg_dist"
    MAX_DIST = "max_dist"
    MAX_AVG_COMB = "max_avg_comb"
    LAT_LON = "lat_lon"

    @property
    def dim(self) -> int:
        return 1 if self in (FeatureKind.AVG_DIST, FeatureKind.MAX_DIST) else 2

    @property
    def k_dependent(self) -> bool:
        return self is not FeatureKind.LAT_LON

    @classmethod
    def parse(cls, value: "str | FeatureKind") -> "FeatureKind":
        if isinstance(value, FeatureKind):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ParameterError(f"unknown feature {value!r}; expected one of {names}") from None

    def __str__(self) -> str:
        return self.value


def features_from_neighbors(kind: FeatureKind, coords: np.ndarray,
                            distances: np.ndarray, ks: Sequence[int]) -> np.ndarray:
    """Feature values for many points at many k.

    ``distances`` is ``(m, kmax)`` with each row's neighbor distances in rank
    order. Returns ``(len(ks), m)`` for 1-D kinds and ``(len(ks), m, 2)`` for
    2-D kinds; LAT_LON yields a single shared slot ``(1, m, 2)``.
    """
    ks = np.asarray(ks, dtype=np.int64)
    if kind is FeatureKind.LAT_LON:
        return np.ascontiguousarray(coords[:, ::-1], dtype=np.float64)[None, :, :]
    cols = ks - 1
    maxd = distances[:, cols].T
    if kind is FeatureKind.MAX_DIST:
        return np.ascontiguousarray(maxd)
    # sequential left-to-right sum, matching sum(d[:k]) / k in rank order
    avgd = np.cumsum(distances, axis=1)[:, cols].T / ks[:, None]
    if kind is FeatureKind.AVG_DIST:
        return np.ascontiguousarray(avgd)
    return np.ascontiguousarray(np.stack([maxd, avgd], axis=-1))


def feature_value(kind: FeatureKind | str, train, p: GeoPoint, k: int,
                  exclude: int | None = None) -> tuple[float, ...]:
    """Feature of ``p``'s k-environment in ``train``: a 1- or 2-tuple.

    avg_dist is the mean neighbor distance, max_dist the k-th neighbor's
    distance, max_avg_comb the pair ``(max_dist, avg_dist)`` and lat_lon the
    point's own ``(lat, lon)``.
    """
    kind = FeatureKind.parse(kind)
    q = as_coords(p)
    if kind is FeatureKind.LAT_LON:
        return (float(q[0, 1]), float(q[0, 0]))
    _, dist = train.index.query(q, k, exclude=None if exclude is None else [exclude])
    values = features_from_neighbors(kind, q, dist, [k])[0, 0]
    return tuple(float(v) for v in np.atleast_1d(values))


def similarity(kind: FeatureKind | str, fa: Sequence[float], fb: Sequence[float]) -> float:
    """Negated Euclidean distance between two feature values (0 when equal)."""
    kind = FeatureKind.parse(kind)
    fa = tuple(float(v) for v in np.atleast_1d(fa))
    fb = tuple(float(v) for v in np.atleast_1d(fb))
    if len(fa) != kind.dim or len(fb) != kind.dim:
        raise ParameterError(
            f"{kind} features are {kind.dim}-D, got {len(fa)}-D and {len(fb)}-D")
    if kind.dim == 1:
        return -abs(fa[0] - fb[0])
    dx = fa[0] - fb[0]
    dy = fa[1] - fb[1]
    return -math.sqrt(dx * dx + dy * dy)
