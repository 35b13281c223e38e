"""Tests, dead-end tests, matching rows and clustering.

A column set is a *test* when the rows, restricted to those columns, are
pairwise distinct. A dead-end test is an inclusion-minimal test. Since a set
is a test exactly when it intersects the difference set of every row pair,
dead-end tests are the minimal hitting sets of the (reduced) discernibility
family, which is how they are enumerated here.

Column sets are handled internally as Python int bitmasks (bit j = column j),
so there is no fixed ceiling on the column count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import ColumnSet, DiscreteMatrix, as_column_set
from .errors import EmptyReport, IndistinguishableRows, ParameterError


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _size_lex_key(mask: int):
    return (mask.bit_count(), tuple(_bits(mask)))


class _BudgetTripped(Exception):
    def __init__(self, kind):
        self.kind = kind


def is_test(matrix: DiscreteMatrix, cols) -> bool:
    cols = as_column_set(cols, matrix.m)
    if matrix.n <= 1:
        return True
    if not len(cols):
        return False
    proj = matrix.symbols[:, list(cols.members)]
    return np.unique(proj, axis=0).shape[0] == matrix.n


def is_dead_end_test(matrix: DiscreteMatrix, cols) -> bool:
    # removing one column suffices: the test property is monotone
    cols = as_column_set(cols, matrix.m)
    if not is_test(matrix, cols):
        return False
    return all(not is_test(matrix, cols.without(c)) for c in cols)


@dataclass(frozen=True)
class DiscernibilityFamily:
    pairs: list  # (row_index_1, row_index_2, ColumnSet) per unordered pair
    reduced: list  # inclusion-minimal distinct difference sets

    @property
    def reduced_masks(self) -> list[int]:
        return [c.mask for c in self.reduced]


def pair_difference_masks(matrix: DiscreteMatrix) -> list[tuple[int, int, int]]:
    out = []
    s = matrix.symbols
    for i in range(matrix.n - 1):
        neq = s[i + 1 :] != s[i]
        packed = np.packbits(neq, axis=1, bitorder="little")
        for off, row in enumerate(packed):
            out.append((i, i + 1 + off, int.from_bytes(row.tobytes(), "little")))
    return out


def _as_words(masks: list[int], m: int) -> np.ndarray:
    nbytes = max(8, -(-m // 64) * 8)
    buf = b"".join(mask.to_bytes(nbytes, "little") for mask in masks)
    return np.frombuffer(buf, dtype=np.uint64).reshape(len(masks), nbytes // 8)


def minimal_antichain(masks, deadline: float | None = None) -> list[int]:
    """Drop duplicates and supersets, keeping size-then-lexicographic order."""
    ordered = sorted(set(masks), key=_size_lex_key)
    if not ordered:
        return []
    words = _as_words(ordered, max(ordered).bit_length())
    kept_rows = np.empty_like(words)
    kept: list[int] = []
    for i, mask in enumerate(ordered):
        if deadline is not None and not i & 63 and time.monotonic() > deadline:
            raise _BudgetTripped("time")
        if kept:
            # some kept set has no column outside this one -> it is a subset
            outside = kept_rows[: len(kept)] & ~words[i]
            if not outside.any(axis=1).all():
                continue
        kept_rows[len(kept)] = words[i]
        kept.append(mask)
    return kept


def discernibility(matrix: DiscreteMatrix) -> DiscernibilityFamily:
    raw = pair_difference_masks(matrix)
    _raise_on_matching(raw, matrix)
    return DiscernibilityFamily(
        pairs=[(a, b, ColumnSet.from_mask(mask)) for a, b, mask in raw],
        reduced=[ColumnSet.from_mask(mask) for mask in minimal_antichain(mask for _, _, mask in raw)],
    )


def _raise_on_matching(raw, matrix):
    matching = [(a, b) for a, b, mask in raw if mask == 0]
    if matching:
        raise IndistinguishableRows(matching, matrix.row_labels)


def _reduced_masks(matrix: DiscreteMatrix, deadline) -> list[int]:
    raw = pair_difference_masks(matrix)
    _raise_on_matching(raw, matrix)
    return minimal_antichain((mask for _, _, mask in raw), deadline)


# -- minimal hitting set enumeration ----------------------------------------


class _Search:
    """Depth-first minimal-hitting-set search over bitmasks.

    Each node extends the current set with one element of an uncovered
    family member, and is pruned as soon as some chosen column loses every
    set it alone covers (then no extension can be minimal).
    """

    def __init__(self, family, max_count, deadline):
        self.family = family
        self.max_count = max_count
        self.deadline = deadline
        self.found: list[int] = []
        self.nodes = 0

    def _tick(self):
        self.nodes += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _BudgetTripped("time")

    def _is_minimal(self, s):
        owned = 0
        for f in self.family:
            h = f & s
            if h and not h & (h - 1):
                owned |= h
        return owned == s

    def _record(self, s):
        if self.max_count is not None and len(self.found) >= self.max_count:
            raise _BudgetTripped("count")
        self.found.append(s)

    def branches(self, s, cand, uncov):
        """Child nodes (s', cand', uncov') of a node, in search order."""
        pick = min(uncov, key=lambda f: ((f & cand).bit_count(), f))
        choices = pick & cand
        cand &= ~choices
        out = []
        for e in _bits(choices):
            bit = 1 << e
            s2 = s | bit
            if self._is_minimal(s2):
                out.append((s2, cand, [f for f in uncov if not f & bit]))
            cand |= bit
        return out

    def run(self, s, cand, uncov):
        self._tick()
        if not uncov:
            self._record(s)
            return
        for child in self.branches(s, cand, uncov):
            self.run(*child)


def _run_subtree(family, s, cand, uncov, max_count, remaining):
    deadline = None if remaining is None else time.monotonic() + remaining
    search = _Search(family, max_count, deadline)
    hit = "none"
    try:
        search.run(s, cand, uncov)
    except _BudgetTripped as trip:
        hit = trip.kind
    return search.found, hit


@dataclass(frozen=True)
class DeadEndTestReport:
    tests: list  # ColumnSet, ascending by size then lexicographic
    min_length: int | None
    exhausted: bool
    elapsed: float  # seconds
    budget_hit: str  # "none" | "count" | "time"
    columns: int = field(default=0)


def _check_budgets(max_count, time_budget):
    if max_count is not None and max_count < 1:
        raise ParameterError(f"max_count must be >= 1, got {max_count}", max_count=max_count)
    if time_budget is not None and time_budget <= 0:
        raise ParameterError(f"time budget must be positive, got {time_budget}", time_budget=time_budget)


def enumerate_dead_end_tests(
    matrix: DiscreteMatrix,
    max_count: int | None = 100_000,
    time_budget: float | None = 60.0,
    workers: int = 1,
) -> DeadEndTestReport:
    """Enumerate all dead-end tests within a count and wall-time budget.

    ``time_budget`` is in seconds; ``None`` disables a budget. With
    ``workers > 1`` the top-level branches run in separate processes and are
    merged in branch order, so the result matches a single-process run
    unless the time budget trips.
    """
    _check_budgets(max_count, time_budget)
    start = time.monotonic()
    deadline = None if time_budget is None else start + time_budget
    try:
        family = _reduced_masks(matrix, deadline)
    except _BudgetTripped:
        return DeadEndTestReport([], None, False, time.monotonic() - start, "time", matrix.m)
    universe = 0
    for f in family:
        universe |= f

    if not family:
        found, hit = [0], "none"
    elif workers <= 1:
        found, hit = _run_subtree(family, 0, universe, family, max_count, time_budget)
    else:
        roots = _Search(family, None, None).branches(0, universe, family)
        remaining = None if time_budget is None else max(time_budget - (time.monotonic() - start), 1e-6)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_subtree, family, *root, max_count, remaining) for root in roots]
            parts = [fut.result() for fut in futures]
        found, hit = [], "none"
        for part, part_hit in parts:
            found.extend(part)
            if part_hit == "time":
                hit = "time"
            elif part_hit == "count" or (max_count is not None and len(found) > max_count):
                hit = "count"
                break
        if max_count is not None and len(found) > max_count:
            found = found[:max_count]
            hit = "count"

    tests = [ColumnSet.from_mask(s) for s in sorted(found, key=_size_lex_key)]
    return DeadEndTestReport(
        tests=tests,
        min_length=len(tests[0]) if tests else None,
        exhausted=hit == "none",
        elapsed=time.monotonic() - start,
        budget_hit=hit,
        columns=matrix.m,
    )


# -- minimum test length ----------------------------------------------------


class MinTestLength(NamedTuple):
    """Shortest test length; a proven lower bound when ``exact`` is False."""

    value: int
    exact: bool
    witness: ColumnSet | None = None


def pigeonhole_bound(alphabet_sizes, n: int) -> int:
    """Fewest columns whose joint alphabet can hold n distinct rows."""
    if n <= 1:
        return 0
    prod = 1
    for r, k in enumerate(sorted(alphabet_sizes, reverse=True), start=1):
        prod *= k
        if prod >= n:
            return r
    return len(alphabet_sizes) + 1


def _packing_bound(uncov, excluded):
    # pairwise-disjoint uncovered sets each need their own column
    used = 0
    count = 0
    for f in sorted((f & ~excluded for f in uncov), key=int.bit_count):
        if not f & used:
            used |= f
            count += 1
    return count


def _hitting_set_within(family, r, deadline):
    """Return a hitting set of size <= r, or None if none exists."""
    nodes = 0

    def dfs(s, excluded, uncov, left):
        nonlocal nodes
        nodes += 1
        if deadline is not None and time.monotonic() > deadline:
            raise _BudgetTripped("time")
        if not uncov:
            return s
        if _packing_bound(uncov, excluded) > left:
            return None
        pick = min(uncov, key=lambda f: ((f & ~excluded).bit_count(), f))
        for e in _bits(pick & ~excluded):
            bit = 1 << e
            hit = dfs(s | bit, excluded, [f for f in uncov if not f & bit], left - 1)
            if hit is not None:
                return hit
            excluded |= bit
        return None

    return dfs(0, 0, list(family), r)


def min_test_length(matrix: DiscreteMatrix, time_budget: float | None = 60.0) -> MinTestLength:
    """Size of the shortest test, by iterative deepening from the pigeonhole bound."""
    _check_budgets(None, time_budget)
    deadline = None if time_budget is None else time.monotonic() + time_budget
    floor = pigeonhole_bound(matrix.alphabet_sizes, matrix.n)
    try:
        family = _reduced_masks(matrix, deadline)
    except _BudgetTripped:
        return MinTestLength(floor, False)
    r = max(floor, _packing_bound(family, 0))
    while True:
        try:
            witness = _hitting_set_within(family, r, deadline)
        except _BudgetTripped:
            return MinTestLength(r, False)
        if witness is not None:
            return MinTestLength(witness.bit_count(), True, ColumnSet.from_mask(witness))
        r += 1


# -- clustering and importance ----------------------------------------------


@dataclass(frozen=True)
class RowPartition:
    clusters: list  # lists of row indices, ordered by first member
    defining_columns: ColumnSet

    def matching_groups(self) -> list:
        return [c for c in self.clusters if len(c) >= 2]


def find_matching_row_groups(matrix: DiscreteMatrix, cols=None) -> RowPartition:
    """Group rows whose projections onto ``cols`` (default: all columns) agree."""
    cols = as_column_set(range(matrix.m) if cols is None else cols, matrix.m)
    proj = matrix.symbols[:, list(cols.members)]
    groups: dict[tuple, list[int]] = {}
    for i, row in enumerate(proj.tolist()):
        groups.setdefault(tuple(row), []).append(i)
    return RowPartition(list(groups.values()), cols)


def column_importance(report: DeadEndTestReport, m: int) -> list[tuple[int, int, float]]:
    """(column, count, frequency) of membership across the reported tests."""
    tests = report.tests if isinstance(report, DeadEndTestReport) else list(report)
    if not tests:
        raise EmptyReport("no dead-end tests to score")
    counts = [0] * m
    for t in tests:
        for c in t:
            counts[c] += 1
    rows = [(j, counts[j], counts[j] / len(tests)) for j in range(m)]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows
