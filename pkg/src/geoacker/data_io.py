"""CSV ingestion/export and deterministic synthetic datasets."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .geo import DataError, Dataset, ParameterError


class MissingColumnError(DataError):
    pass


class MalformedNumberError(DataError):
    pass


class CoordinateRangeError(DataError):
    pass


class EmptyFileError(DataError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    """Where to find longitude, latitude and label.

    Columns are header names, or 0-based positions (ints or digit strings).
    """

    lon_col: str | int = "lon"
    lat_col: str | int = "lat"
    label_col: str | int | None = "label"
    delimiter: str = ","
    header: bool = True

    def __post_init__(self) -> None:
        if len(self.delimiter) != 1:
            raise ParameterError("delimiter must be a single character")
        cols = [self.lon_col, self.lat_col]
        if self.label_col is not None:
            cols.append(self.label_col)
        if len({str(c) for c in cols}) != len(cols):
            raise ParameterError("lon, lat and label columns must be distinct")

    def _resolve(self, col: str | int, header: list[str] | None, what: str) -> int:
        if isinstance(col, int) or (isinstance(col, str) and col.isdigit()):
            return int(col)
        if header is None:
            raise ParameterError(f"{what} column {col!r} given by name but the file has no header")
        try:
            return header.index(col)
        except ValueError:
            raise MissingColumnError(f"line 1: no {what} column named {col!r}") from None


def _read_rows(path: str | os.PathLike | TextIO, schema: CsvSchema, need_label: bool):
    if hasattr(path, "read"):
        text = path.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text), delimiter=schema.delimiter)
    rows = [(i + 1, r) for i, r in enumerate(reader) if r and any(c.strip() for c in r)]
    header = None
    if schema.header:
        if not rows:
            raise EmptyFileError("file is empty")
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise EmptyFileError("file contains no data rows")
    ilon = schema._resolve(schema.lon_col, header, "longitude")
    ilat = schema._resolve(schema.lat_col, header, "latitude")
    ilab = None
    if need_label:
        if schema.label_col is None:
            raise ParameterError("a label column is required")
        ilab = schema._resolve(schema.label_col, header, "label")
    elif schema.label_col is not None and header is not None and schema.label_col in header:
        ilab = header.index(schema.label_col)

    width = max(i for i in (ilon, ilat, ilab) if i is not None) + 1
    coords, labels = [], []
    for line, row in rows:
        if len(row) < width:
            raise MissingColumnError(f"line {line}: expected at least {width} columns, got {len(row)}")
        vals = []
        for idx, name, bound in ((ilon, "longitude", 180.0), (ilat, "latitude", 90.0)):
            raw = row[idx].strip()
            try:
                v = float(raw)
            except ValueError:
                raise MalformedNumberError(f"line {line}: {name} {raw!r} is not a number") from None
            if not math.isfinite(v):
                raise MalformedNumberError(f"line {line}: {name} {raw!r} is not finite")
            if not -bound <= v <= bound:
                raise CoordinateRangeError(
                    f"line {line}: {name} {v} outside [{-bound:g}, {bound:g}]")
            vals.append(v)
        coords.append(vals)
        labels.append(row[ilab].strip() if ilab is not None else None)
    return np.array(coords, dtype=np.float64).reshape(-1, 2), labels


def load_csv(path: str | os.PathLike | TextIO, schema: CsvSchema | None = None,
             name: str | None = None) -> Dataset:
    """Labeled points from CSV; label ids follow first appearance, rows keep file order."""
    schema = schema or CsvSchema()
    coords, names = _read_rows(path, schema, need_label=True)
    lookup: dict[str, int] = {}
    ids = [lookup.setdefault(nm, len(lookup)) for nm in names]
    if name is None:
        name = Path(path).stem if not hasattr(path, "read") else ""
    return Dataset(coords, np.array(ids, dtype=np.int64), tuple(lookup), name)


def load_points(path: str | os.PathLike | TextIO, schema: CsvSchema | None = None) -> np.ndarray:
    """Unlabeled query coordinates ``(m, 2)``; a label column, if present, is ignored."""
    coords, _ = _read_rows(path, schema or CsvSchema(), need_label=False)
    return coords


def write_csv(dataset: Dataset, path: str | os.PathLike | TextIO,
              schema: CsvSchema | None = None) -> None:
    """Write ``lon, lat, label`` rows; floats use ``repr`` so they round-trip exactly."""
    schema = schema or CsvSchema()
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=schema.delimiter, lineterminator="\n")
    if schema.header:
        w.writerow([str(schema.lon_col), str(schema.lat_col), str(schema.label_col or "label")])
    names = dataset.label_names
    for (lon, lat), lab in zip(dataset.coords.tolist(), dataset.labels.tolist()):
        w.writerow([repr(lon), repr(lat), names[lab]])
    if hasattr(path, "write"):
        path.write(buf.getvalue())
    else:
        atomic_write(path, buf.getvalue())


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file and rename, so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- synthetic

GENERATORS = ("separable_halves", "noisy_dense_plus_sparse_checkerboard", "uniform_random_labels")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a generated dataset; the output is a pure function of these.

    ``noisy_dense_plus_sparse_checkerboard`` places ``dense_fraction`` of the
    points in a Gaussian blob split into two half-planes whose labels are
    flipped with probability ``noise`` (many neighbors average the noise out),
    and the rest in a noise-free checkerboard of ``cells x cells`` squares
    of side ``cell_size`` (only the closest neighbors share a square).
    """

    kind: str = "noisy_dense_plus_sparse_checkerboard"
    n_points: int = 6000
    n_classes: int = 2
    noise: float = 0.0
    seed: int = 0
    dense_fraction: float = 0.6
    dense_sigma: float = 0.3
    cells: int = 12
    cell_size: float = 0.33
    extent: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in GENERATORS:
            raise ParameterError(f"unknown generator {self.kind!r}; expected one of {GENERATORS}")
        if self.n_points < 1:
            raise ParameterError("n_points must be >= 1")
        if self.n_classes < 1 or (self.kind != "uniform_random_labels" and self.n_classes < 2):
            raise ParameterError("n_classes too small for this generator")
        if not 0.0 <= self.noise < 1.0:
            raise ParameterError("noise must lie in [0, 1)")
        if not 0.0 < self.dense_fraction < 1.0 and self.kind == GENERATORS[1]:
            raise ParameterError("dense_fraction must lie in (0, 1)")
        if self.dense_sigma <= 0 or self.cell_size <= 0 or self.cells < 1 or self.extent <= 0:
            raise ParameterError("geometry parameters must be positive")


def _flip(rng: np.random.Generator, labels: np.ndarray, rate: float, n_classes: int) -> np.ndarray:
    if rate <= 0:
        return labels
    flip = rng.random(labels.shape[0]) < rate
    shift = rng.integers(1, n_classes, size=labels.shape[0])
    return np.where(flip, (labels + shift) % n_classes, labels)


def generate(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    n, c = spec.n_points, spec.n_classes
    names = tuple(f"c{i}" for i in range(c))
    if spec.kind == "separable_halves":
        labels = np.arange(n, dtype=np.int64) % 2
        lon = rng.uniform(1.0, spec.extent, size=n)
        lon = np.where(labels == 0, -lon, lon)
        lat = rng.uniform(-spec.extent, spec.extent, size=n)
        labels = _flip(rng, labels, spec.noise, 2)
        return Dataset(np.column_stack([lon, lat]), labels, names[:2], spec.kind)
    if spec.kind == "uniform_random_labels":
        xy = rng.uniform(-spec.extent, spec.extent, size=(n, 2))
        labels = rng.integers(0, c, size=n)
        return Dataset(xy, labels, names, spec.kind)

    n_dense = int(round(n * spec.dense_fraction))
    n_sparse = n - n_dense
    dense = rng.normal(0.0, spec.dense_sigma, size=(n_dense, 2))
    dense_true = (dense[:, 0] >= 0).astype(np.int64)
    dense_lab = _flip(rng, dense_true, spec.noise, c)
    width = spec.cells * spec.cell_size
    x0 = 4.0 * spec.dense_sigma + spec.cell_size
    sparse = rng.uniform(0.0, width, size=(n_sparse, 2))
    cell = np.floor(sparse / spec.cell_size).astype(np.int64)
    sparse_lab = (cell[:, 0] + cell[:, 1]) % c
    sparse = sparse + np.array([x0, -width / 2.0])
    coords = np.concatenate([dense, sparse])
    labels = np.concatenate([dense_lab, sparse_lab])
    # interleave the two regions so row order carries no structure
    order = rng.permutation(n)
    return Dataset(coords[order], labels[order], names, spec.kind)
