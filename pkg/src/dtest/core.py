"""Matrix data model and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, ParseError, RangeError, ShapeError, ValidationError


def _default_col_labels(m: int) -> list[str]:
    return [f"t{j}" for j in range(m)]


def _check_labels(row_labels, col_labels, n, m):
    if len(row_labels) != n:
        raise ShapeError(f"expected {n} row labels, got {len(row_labels)}")
    if len(col_labels) != m:
        raise ShapeError(f"expected {m} column labels, got {len(col_labels)}")
    seen = set()
    dupes = []
    for label in row_labels:
        if label in seen:
            dupes.append(label)
        seen.add(label)
    if dupes:
        raise ValidationError(f"duplicate row labels: {sorted(set(dupes))}", labels=sorted(set(dupes)))


@dataclass(frozen=True, eq=False)
class RawSeriesMatrix:
    """Real-valued series, one per row; columns are time points."""

    values: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError("raw values must be a 2-d grid")
        n, m = values.shape
        if n < 1:
            raise EmptyInputError("raw matrix has no rows")
        if m < 2:
            raise ShapeError(f"raw matrix needs at least 2 time columns, got {m}", n_cols=m)
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ParseError(f"non-finite value at row {i}, column {j}", row=int(i), column=int(j))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        _check_labels(self.row_labels, self.col_labels, n, m)

    @classmethod
    def from_rows(cls, rows, row_labels=None, col_labels=None) -> "RawSeriesMatrix":
        values = np.array(rows, dtype=float)
        if values.ndim != 2:
            raise ShapeError("rows must form a 2-d grid")
        n, m = values.shape
        return cls(
            values,
            row_labels if row_labels is not None else [f"r{i}" for i in range(n)],
            col_labels if col_labels is not None else _default_col_labels(m),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class DiscreteMatrix:
    """Symbol matrix with a per-column alphabet size.

    With all alphabet sizes equal this is the binary/k-valued matrix built by
    discretization; with varying sizes it is the mixed-alphabet case.
    """

    symbols: np.ndarray
    alphabet_sizes: tuple[int, ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=np.int64)
        if symbols.ndim != 2:
            raise ShapeError("symbols must be a 2-d grid")
        n, m = symbols.shape
        sizes = tuple(int(k) for k in self.alphabet_sizes)
        if len(sizes) != m:
            raise ShapeError(f"expected {m} alphabet sizes, got {len(sizes)}")
        for j, k in enumerate(sizes):
            if k < 2:
                raise RangeError(f"alphabet size of column {j} must be >= 2, got {k}", column=j)
        if symbols.size:
            bad = (symbols < 0) | (symbols >= np.array(sizes, dtype=np.int64))
            if bad.any():
                i, j = np.argwhere(bad)[0]
                raise RangeError(
                    f"symbol {symbols[i, j]} at row {i}, column {j} outside [0, {sizes[j]})",
                    row=int(i),
                    column=int(j),
                )
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "alphabet_sizes", sizes)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        _check_labels(self.row_labels, self.col_labels, n, m)

    @classmethod
    def from_rows(cls, rows, alphabet_sizes=None, row_labels=None, col_labels=None) -> "DiscreteMatrix":
        symbols = np.array(rows, dtype=np.int64)
        if symbols.ndim != 2:
            raise ShapeError("rows must form a 2-d grid")
        n, m = symbols.shape
        if alphabet_sizes is None:
            alphabet_sizes = infer_alphabet_sizes(symbols)
        return cls(
            symbols,
            alphabet_sizes,
            row_labels if row_labels is not None else [f"r{i}" for i in range(n)],
            col_labels if col_labels is not None else _default_col_labels(m),
        )

    @property
    def n(self) -> int:
        return self.symbols.shape[0]

    @property
    def m(self) -> int:
        return self.symbols.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DiscreteMatrix):
            return NotImplemented
        return (
            self.alphabet_sizes == other.alphabet_sizes
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and np.array_equal(self.symbols, other.symbols)
        )

    __hash__ = None


@dataclass(frozen=True, order=True)
class ColumnSet:
    """Retained column indices, strictly increasing."""

    members: tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(int(c) for c in self.members)
        for a, b in zip(members, members[1:]):
            if b <= a:
                raise ValidationError(f"column indices must be strictly increasing: {members}")
        if members and members[0] < 0:
            raise ValidationError(f"negative column index {members[0]}")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, columns: Iterable[int]) -> "ColumnSet":
        return cls(tuple(sorted(set(int(c) for c in columns))))

    @classmethod
    def from_mask(cls, mask: int) -> "ColumnSet":
        out = []
        j = 0
        while mask:
            if mask & 1:
                out.append(j)
            mask >>= 1
            j += 1
        return cls(tuple(out))

    @property
    def mask(self) -> int:
        mask = 0
        for c in self.members:
            mask |= 1 << c
        return mask

    def check(self, m: int) -> "ColumnSet":
        if self.members and self.members[-1] >= m:
            raise ValidationError(
                f"column index {self.members[-1]} out of range for {m} columns", column=self.members[-1], m=m
            )
        return self

    def without(self, column: int) -> "ColumnSet":
        return ColumnSet(tuple(c for c in self.members if c != column))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, column):
        return column in self.members


def as_column_set(cols, m: int) -> ColumnSet:
    if not isinstance(cols, ColumnSet):
        cols = ColumnSet.of(cols)
    return cols.check(m)


def infer_alphabet_sizes(symbols: np.ndarray) -> tuple[int, ...]:
    symbols = np.asarray(symbols)
    if symbols.shape[0] == 0:
        return tuple(2 for _ in range(symbols.shape[1]))
    return tuple(max(2, int(v) + 1) for v in symbols.max(axis=0))


def _read_records(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        records = [rec for rec in csv.reader(fh) if rec and any(f.strip() for f in rec)]
    if not records:
        raise EmptyInputError(f"{path}: no data")
    return records


def _looks_numeric(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def _split_header(records, has_header):
    if has_header is None:
        # a header has at least one non-empty, non-numeric value field
        has_header = any(f.strip() and not _looks_numeric(f) for f in records[0][1:])
    if has_header:
        return records[0][1:], records[1:]
    return None, records


def _check_ragged(body, width, offset):
    for r, rec in enumerate(body):
        if len(rec) != width:
            raise ShapeError(
                f"record {r + offset} has {len(rec) - 1} values, expected {width - 1}",
                record=r + offset,
            )


def load_raw_csv(path, has_header: bool | None = None) -> RawSeriesMatrix:
    """Read a real-valued series matrix.

    First field of each record is the row label. ``has_header=None`` detects
    a header by the presence of non-numeric fields in the first record.
    """
    records = _read_records(path)
    header, body = _split_header(records, has_header)
    if not body:
        raise EmptyInputError(f"{path}: header but no data rows")
    width = len(header) + 1 if header is not None else len(body[0])
    _check_ragged(body, width, 1 if header is not None else 0)
    labels = []
    values = []
    for r, rec in enumerate(body):
        labels.append(rec[0].strip())
        row = []
        for c, field in enumerate(rec[1:]):
            col = header[c] if header is not None else f"t{c}"
            try:
                v = float(field)
            except ValueError:
                raise ParseError(f"non-numeric cell {field!r} at row {labels[-1]!r}, column {col!r}", row=r, column=c)
            if not math.isfinite(v):
                raise ParseError(f"missing or non-finite cell {field!r} at row {labels[-1]!r}, column {col!r}", row=r, column=c)
            row.append(v)
        values.append(row)
    col_labels = [h.strip() for h in header] if header is not None else _default_col_labels(width - 1)
    return RawSeriesMatrix(np.array(values, dtype=float).reshape(len(body), width - 1), labels, col_labels)


def load_discrete_csv(path, alphabet_sizes: Sequence[int] | None = None, has_header: bool | None = None) -> DiscreteMatrix:
    """Read an integer symbol matrix; alphabet sizes default to max+1 (at least 2)."""
    records = _read_records(path)
    header, body = _split_header(records, has_header)
    if not body:
        raise EmptyInputError(f"{path}: header but no data rows")
    width = len(header) + 1 if header is not None else len(body[0])
    _check_ragged(body, width, 1 if header is not None else 0)
    labels = []
    cells = []
    for r, rec in enumerate(body):
        labels.append(rec[0].strip())
        row = []
        for c, field in enumerate(rec[1:]):
            try:
                row.append(int(field.strip()))
            except ValueError:
                raise ParseError(f"non-integer cell {field!r} at row {labels[-1]!r}, column {c}", row=r, column=c)
            if row[-1] < 0:
                raise RangeError(f"negative symbol {row[-1]} at row {labels[-1]!r}, column {c}", row=r, column=c)
        cells.append(row)
    symbols = np.array(cells, dtype=np.int64).reshape(len(body), width - 1)
    if alphabet_sizes is None:
        alphabet_sizes = infer_alphabet_sizes(symbols)
    elif len(alphabet_sizes) != symbols.shape[1]:
        raise ShapeError(f"{len(alphabet_sizes)} alphabet sizes for {symbols.shape[1]} columns")
    col_labels = [h.strip() for h in header] if header is not None else _default_col_labels(width - 1)
    return DiscreteMatrix(symbols, alphabet_sizes, labels, col_labels)


def write_discrete_csv(matrix: DiscreteMatrix, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *matrix.col_labels])
        for label, row in zip(matrix.row_labels, matrix.symbols.tolist()):
            writer.writerow([label, *row])
