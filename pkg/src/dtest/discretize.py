"""Turn raw series into symbol matrices.

Both methods work on consecutive time steps within a row, so an n x m raw
matrix becomes an n x (m - 1) symbol matrix. Output column j is labelled
with the raw column j + 1 (the moment the change is observed).
"""

from __future__ import annotations

import numpy as np

from .core import DiscreteMatrix, RawSeriesMatrix
from .errors import ParameterError, ShapeError


def _require_steps(raw: RawSeriesMatrix) -> None:
    if raw.values.shape[1] < 2:
        raise ShapeError(f"need at least 2 columns to take differences, got {raw.values.shape[1]}")


def discretize_sign(raw: RawSeriesMatrix) -> DiscreteMatrix:
    """1 where the series did not fall from one step to the next, else 0."""
    _require_steps(raw)
    v = raw.values
    symbols = (v[:, 1:] >= v[:, :-1]).astype(np.int64)
    return DiscreteMatrix(symbols, (2,) * symbols.shape[1], raw.row_labels, raw.col_labels[1:])


def quantile_breakpoints(values: np.ndarray, levels: int) -> np.ndarray:
    """Lower nearest-rank breakpoints at fractions 1/k, ..., (k-1)/k.

    Breakpoint t is the sorted value at 0-based position floor(t*N/k), so
    exactly floor(t*N/k) values lie strictly below it when there are no ties.
    """
    flat = np.sort(np.asarray(values, dtype=float).ravel())
    n = flat.size
    idx = (np.arange(1, levels) * n) // levels
    return flat[idx]


def assign_levels(values: np.ndarray, breakpoints: np.ndarray) -> np.ndarray:
    # intervals [b_t, b_{t+1}); the top one is unbounded
    return np.searchsorted(breakpoints, values, side="right").astype(np.int64)


def discretize_quantile(raw: RawSeriesMatrix, levels: int, per_column: bool = False) -> DiscreteMatrix:
    """Bin consecutive differences into ``levels`` empirical-quantile classes.

    Breakpoints are taken over the whole difference matrix, or separately for
    each column when ``per_column`` is set.
    """
    if not isinstance(levels, (int, np.integer)) or levels < 2:
        raise ParameterError(f"levels must be an integer >= 2, got {levels!r}", levels=levels)
    _require_steps(raw)
    diffs = np.diff(raw.values, axis=1)
    if per_column:
        symbols = np.empty(diffs.shape, dtype=np.int64)
        for j in range(diffs.shape[1]):
            symbols[:, j] = assign_levels(diffs[:, j], quantile_breakpoints(diffs[:, j], levels))
    else:
        symbols = assign_levels(diffs, quantile_breakpoints(diffs, levels))
    return DiscreteMatrix(symbols, (int(levels),) * diffs.shape[1], raw.row_labels, raw.col_labels[1:])
