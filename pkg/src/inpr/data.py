"""Sample containers and CSV ingestion for multi-source regression data.

A :class:`MultiSourceData` holds one target sample (source id 0) plus any
number of source samples, all sharing the covariate dimension.  Weight
vectors and flattened observation vectors follow one canonical order:
target observations first, then sources by ascending id, each set in its
stored row order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ParseError, ShapeError


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SampleSet:
    """Observations (xs, ys) from one population.

    ``xs`` has shape (n, d), ``ys`` shape (n,); both are stored read-only.
    """

    source_id: int
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if xs.ndim != 2:
            raise ShapeError(f"xs must be (n, d), got shape {xs.shape}")
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.shape[0] != ys.shape[0]:
            raise ShapeError(
                f"xs has {xs.shape[0]} rows but ys has {ys.shape[0]} entries"
            )
        if xs.shape[0] == 0:
            raise InputError("a sample set cannot be empty")
        if self.source_id < 0:
            raise InputError(f"source_id must be >= 0, got {self.source_id}")
        object.__setattr__(self, "xs", _readonly(xs))
        object.__setattr__(self, "ys", _readonly(ys))

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class MultiSourceData:
    """Target sample (id 0) followed by source samples with ids 1..M."""

    sets: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        sets = tuple(self.sets)
        if not sets:
            raise InputError("MultiSourceData requires at least the target set")
        ids = [s.source_id for s in sets]
        if ids != list(range(len(sets))):
            raise InputError(
                f"source ids must be contiguous 0..M in order, got {ids}"
            )
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ShapeError(f"inconsistent covariate dimensions: {sorted(dims)}")
        object.__setattr__(self, "sets", sets)

    @property
    def target(self) -> SampleSet:
        return self.sets[0]

    @property
    def n_sources(self) -> int:
        return len(self.sets) - 1

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    @property
    def n_total(self) -> int:
        return sum(s.n for s in self.sets)

    def flattened(self) -> tuple[np.ndarray, np.ndarray]:
        """Pooled (xs, ys) in canonical order: target first, sources by id."""
        xs = np.concatenate([s.xs for s in self.sets], axis=0)
        ys = np.concatenate([s.ys for s in self.sets])
        return xs, ys


def from_arrays(pairs: Iterable[tuple[np.ndarray, np.ndarray]]) -> MultiSourceData:
    """Build MultiSourceData from (xs, ys) pairs; the first pair is the target."""
    sets = [SampleSet(i, xs, ys) for i, (xs, ys) in enumerate(pairs)]
    return MultiSourceData(tuple(sets))


def ingest_csv(path) -> MultiSourceData:
    """Read multi-source data from a CSV file.

    The header must be ``source_id,x1[,x2,...],y``; every row carries an
    integer source id (0 = target, required present), d covariate values
    and one response.  Malformed rows are rejected with their line number.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "source_id" or header[-1] != "y":
            raise ParseError(
                f"{path}: header must be 'source_id,x1[,x2,...],y', got {header}"
            )
        dim = len(header) - 2
        expected_x = [f"x{j + 1}" for j in range(dim)]
        if header[1:-1] != expected_x:
            raise ParseError(
                f"{path}: covariate columns must be {expected_x}, got {header[1:-1]}"
            )
        groups: dict[int, list[list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                sid = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            if sid < 0:
                raise ParseError(f"{path}:{lineno}: source_id must be >= 0, got {sid}")
            groups.setdefault(sid, []).append(vals)
    if 0 not in groups:
        raise InputError(f"{path}: no rows with source_id 0 (target sample missing)")
    ids = sorted(groups)
    if ids != list(range(len(ids))):
        raise InputError(
            f"{path}: source ids must be contiguous 0..M, got {ids}"
        )
    sets = []
    for sid in ids:
        block = np.asarray(groups[sid], dtype=float)
        sets.append(SampleSet(sid, block[:, :dim], block[:, dim]))
    return MultiSourceData(tuple(sets))


def emit_csv(data: MultiSourceData, path) -> None:
    """Write multi-source data in the ingestion schema, full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id"] + [f"x{j + 1}" for j in range(data.dim)] + ["y"])
        for s in data.sets:
            for i in range(s.n):
                writer.writerow(
                    [s.source_id]
                    + [repr(float(v)) for v in s.xs[i]]
                    + [repr(float(s.ys[i]))]
                )


def weight_vector(values: Sequence[float], n_total: int) -> np.ndarray:
    """Validate a weight vector against the flattened observation count."""
    w = np.asarray(values, dtype=float).reshape(-1)
    if w.shape[0] != n_total:
        raise ShapeError(f"weight vector has {w.shape[0]} entries, expected {n_total}")
    if np.any(w < 0):
        raise InputError("weights must be nonnegative")
    return w
