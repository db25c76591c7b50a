"""Points, labels, datasets and the planar distance used throughout."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class ParameterError(ValueError):
    """An argument is outside the range an operation accepts."""


class DataError(ValueError):
    """Input data violates a domain invariant (bad coordinate, empty set, ...)."""


def _check_coords(lon: float, lat: float) -> None:
    if not (math.isfinite(lon) and math.isfinite(lat)):
        raise DataError(f"non-finite coordinate ({lon}, {lat})")
    if not -180.0 <= lon <= 180.0:
        raise DataError(f"longitude {lon} outside [-180, 180]")
    if not -90.0 <= lat <= 90.0:
        raise DataError(f"latitude {lat} outside [-90, 90]")


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self) -> None:
        _check_coords(self.lon, self.lat)


@dataclass(frozen=True)
class LabeledPoint:
    point: GeoPoint
    label: int


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """Euclidean distance on raw (lon, lat) degrees.

    No wrap-around at the antimeridian; fine for city-scale data.
    """
    dx = a.lon - b.lon
    dy = a.lat - b.lat
    return math.sqrt(dx * dx + dy * dy)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled points stored column-wise.

    ``coords`` is an ``(n, 2)`` float array of ``(lon, lat)`` rows and
    ``labels`` an int array of ids into ``label_names``. Row position is the
    point's identity; every tie-break in the package falls back to it.
    """

    coords: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...]
    name: str = ""

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=np.float64).reshape(-1, 2)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if coords.shape[0] != labels.shape[0]:
            raise DataError(
                f"{coords.shape[0]} coordinates but {labels.shape[0]} labels"
            )
        if not np.isfinite(coords).all():
            raise DataError("coordinates must be finite")
        if coords.size and (
            np.abs(coords[:, 0]).max() > 180.0 or np.abs(coords[:, 1]).max() > 90.0
        ):
            raise DataError("coordinates outside [-180, 180] x [-90, 90]")
        if len(set(self.label_names)) != len(self.label_names):
            raise DataError("label names must be unique")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.label_names)):
            raise DataError("label id outside the label dictionary")
        coords.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @classmethod
    def from_points(
        cls,
        points: Sequence[tuple[float, float, str]] | Sequence[LabeledPoint],
        label_names: Sequence[str] | None = None,
        name: str = "",
    ) -> "Dataset":
        """Build from ``(lon, lat, label_name)`` triples or ``LabeledPoint``s.

        Label names are numbered in order of first appearance unless
        ``label_names`` is given.
        """
        names: list[str] = list(label_names) if label_names is not None else []
        lookup = {nm: i for i, nm in enumerate(names)}
        coords, labels = [], []
        for item in points:
            if isinstance(item, LabeledPoint):
                coords.append((item.point.lon, item.point.lat))
                labels.append(item.label)
                continue
            lon, lat, lab = item
            if lab not in lookup:
                if label_names is not None:
                    raise DataError(f"unknown label {lab!r}")
                lookup[lab] = len(names)
                names.append(lab)
            coords.append((float(lon), float(lat)))
            labels.append(lookup[lab])
        if not names and labels:
            names = [str(i) for i in range(max(labels) + 1)]
        return cls(np.array(coords, dtype=np.float64).reshape(-1, 2),
                   np.array(labels, dtype=np.int64), tuple(names), name)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def point(self, i: int) -> GeoPoint:
        return GeoPoint(float(self.coords[i, 0]), float(self.coords[i, 1]))

    def __iter__(self) -> Iterator[LabeledPoint]:
        for i in range(len(self)):
            yield LabeledPoint(self.point(i), int(self.labels[i]))

    def subset(self, indexes: Sequence[int] | np.ndarray, name: str | None = None) -> "Dataset":
        """Rows at ``indexes`` (kept in the given order), same label dictionary."""
        idx = np.asarray(indexes, dtype=np.int64)
        return Dataset(self.coords[idx], self.labels[idx], self.label_names,
                       self.name if name is None else name)

    def label_id(self, name: str) -> int:
        try:
            return self.label_names.index(name)
        except ValueError:
            raise DataError(f"unknown label {name!r}") from None


def as_coords(points: Sequence[GeoPoint] | np.ndarray) -> np.ndarray:
    """Normalise query points to a contiguous ``(m, 2)`` float array."""
    if isinstance(points, np.ndarray):
        arr = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
        if not np.isfinite(arr).all():
            raise DataError("query coordinates must be finite")
        return arr
    if isinstance(points, GeoPoint):
        points = [points]
    return np.array([(p.lon, p.lat) for p in points], dtype=np.float64).reshape(-1, 2)
