import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtest.core import ColumnSet, DiscreteMatrix
from dtest.errors import EmptyReport, IndistinguishableRows, ParameterError, ValidationError
from dtest.testing import (
    DeadEndTestReport,
    column_importance,
    discernibility,
    enumerate_dead_end_tests,
    find_matching_row_groups,
    is_dead_end_test,
    is_test,
    min_test_length,
    minimal_antichain,
    pigeonhole_bound,
)

from conftest import brute_dead_end_tests, brute_is_test, random_matrix


def M(rows, sizes=None):
    return DiscreteMatrix.from_rows(rows, sizes)


def members(report):
    return [t.members for t in report.tests]


# -- is_test / is_dead_end_test --------------------------------------------


def test_is_test_examples():
    m = M([[0, 1], [1, 1]])
    assert is_test(m, [0])
    assert not is_test(m, [1])
    assert not is_test(M([[0, 1], [0, 1]]), [0, 1])


def test_is_test_rejects_bad_index():
    with pytest.raises(ValidationError):
        is_test(M([[0, 1], [1, 1]]), [2])


def test_dead_end_examples():
    three = [[0, 0], [0, 1], [1, 0]]
    # oracle: neither single column separates all three rows, both together do
    assert not brute_is_test(three, (0,)) and not brute_is_test(three, (1,))
    assert brute_is_test(three, (0, 1))
    assert is_dead_end_test(M(three), [0, 1])
    assert not is_dead_end_test(M([[0, 1], [1, 1]]), [0, 1])
    assert not is_dead_end_test(M([[0, 1], [1, 1]]), [])


# -- discernibility ---------------------------------------------------------


def test_discernibility_single_pair():
    fam = discernibility(M([[0, 1], [1, 1]]))
    assert fam.pairs == [(0, 1, ColumnSet((0,)))]
    assert fam.reduced == [ColumnSet((0,))]


def test_discernibility_matching_rows_error():
    with pytest.raises(IndistinguishableRows) as info:
        discernibility(M([[0, 0], [0, 0]]))
    assert info.value.pairs == [(0, 1)]
    assert info.value.exit_code == 3


def test_discernibility_lists_every_matching_pair():
    with pytest.raises(IndistinguishableRows) as info:
        discernibility(M([[0, 1], [1, 1], [0, 1], [1, 1]]))
    assert info.value.pairs == [(0, 2), (1, 3)]


def test_discernibility_three_rows():
    rows = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    fam = discernibility(M(rows))
    expected = {
        (a, b): tuple(j for j in range(3) if rows[a][j] != rows[b][j])
        for a, b in itertools.combinations(range(3), 2)
    }
    assert expected == {(0, 1): (1, 2), (0, 2): (0, 2), (1, 2): (0, 1)}
    assert {(a, b): c.members for a, b, c in fam.pairs} == expected
    assert sorted(c.members for c in fam.reduced) == [(0, 1), (0, 2), (1, 2)]


def test_minimal_antichain_drops_supersets_and_duplicates():
    assert minimal_antichain([0b111, 0b011, 0b011, 0b100, 0b110]) == [0b100, 0b011]


# -- enumeration ------------------------------------------------------------


def test_enumerate_three_rows():
    rows = [[0, 0], [0, 1], [1, 0]]
    assert brute_dead_end_tests(rows, 2) == [(0, 1)]
    rep = enumerate_dead_end_tests(M(rows))
    assert members(rep) == [(0, 1)]
    assert rep.min_length == 2 and rep.exhausted and rep.budget_hit == "none"


def test_enumerate_two_rows():
    rep = enumerate_dead_end_tests(M([[0, 0], [1, 1]]))
    assert members(rep) == [(0,), (1,)]
    assert rep.min_length == 1


def test_enumerate_identity_column():
    rep = enumerate_dead_end_tests(M([[0, 0], [1, 0], [2, 0], [3, 0]], [4, 2]))
    assert members(rep) == [(0,)]


def test_enumerate_single_row_gives_empty_test():
    rep = enumerate_dead_end_tests(M([[0, 1, 1]]))
    assert members(rep) == [()]
    assert rep.min_length == 0


def test_enumerate_budget_errors():
    m = M([[0, 0], [1, 1]])
    with pytest.raises(ParameterError):
        enumerate_dead_end_tests(m, max_count=0)
    with pytest.raises(ParameterError):
        enumerate_dead_end_tests(m, time_budget=0)
    with pytest.raises(IndistinguishableRows):
        enumerate_dead_end_tests(M([[1, 0], [1, 0]]))


def test_count_budget_truncates_and_flags():
    rng = np.random.default_rng(3)
    rows, sizes = random_matrix(rng, 8, 14, 3)
    full = enumerate_dead_end_tests(M(rows, sizes), max_count=None, time_budget=None)
    assert len(full.tests) > 5
    capped = enumerate_dead_end_tests(M(rows, sizes), max_count=5, time_budget=None)
    assert len(capped.tests) == 5
    assert not capped.exhausted and capped.budget_hit == "count"
    assert set(capped.tests) <= set(full.tests)
    exact = enumerate_dead_end_tests(M(rows, sizes), max_count=len(full.tests), time_budget=None)
    assert exact.exhausted and exact.tests == full.tests


def test_time_budget_flags():
    rng = np.random.default_rng(11)
    rows = rng.integers(0, 2, size=(40, 60))
    rep = enumerate_dead_end_tests(M(rows, [2] * 60), max_count=None, time_budget=0.05)
    assert rep.budget_hit == "time" and not rep.exhausted
    for t in rep.tests[:20]:
        assert is_dead_end_test(M(rows, [2] * 60), t)


@pytest.mark.parametrize("workers", [2, 3])
def test_parallel_matches_sequential(workers):
    rng = np.random.default_rng(8)
    rows, sizes = random_matrix(rng, 9, 13, 4)
    seq = enumerate_dead_end_tests(M(rows, sizes), time_budget=None)
    par = enumerate_dead_end_tests(M(rows, sizes), time_budget=None, workers=workers)
    assert par.tests == seq.tests and par.exhausted
    seq_c = enumerate_dead_end_tests(M(rows, sizes), max_count=7, time_budget=None)
    par_c = enumerate_dead_end_tests(M(rows, sizes), max_count=7, time_budget=None, workers=workers)
    assert par_c.tests == seq_c.tests and par_c.budget_hit == seq_c.budget_hit == "count"


def test_wide_matrix_beyond_1024_columns():
    m = 1500
    rows = np.zeros((3, m), dtype=int)
    rows[1, 1200] = 1
    rows[2, 1400] = 1
    rep = enumerate_dead_end_tests(M(rows, [2] * m))
    assert members(rep) == [(1200, 1400)]


# -- min_test_length --------------------------------------------------------


def test_min_length_examples():
    assert min_test_length(M([[0, 0], [1, 1]])) == (1, True, ColumnSet((0,)))
    res = min_test_length(M([[0, 0], [0, 1], [1, 0], [1, 1]]))
    assert res.value == 2 and res.exact


def test_min_length_budget_returns_lower_bound():
    rng = np.random.default_rng(2)
    rows = rng.integers(0, 2, size=(200, 400))
    res = min_test_length(M(rows, [2] * 400), time_budget=0.01)
    if not res.exact:
        assert res.value >= pigeonhole_bound([2] * 400, 200)
        assert res.witness is None


def test_pigeonhole_bound_values():
    assert pigeonhole_bound([2, 2, 2], 8) == 3
    assert pigeonhole_bound([2, 2, 2], 9) == 4
    assert pigeonhole_bound([3, 2, 5], 10) == 2
    assert pigeonhole_bound([2], 1) == 0


# -- clustering / importance -----------------------------------------------


def test_matching_groups_examples():
    assert find_matching_row_groups(M([[0, 1], [0, 1], [1, 0]]), [0, 1]).clusters == [[0, 1], [2]]
    assert find_matching_row_groups(M([[0, 1], [0, 1], [1, 0]]), []).clusters == [[0, 1, 2]]
    assert find_matching_row_groups(M([[0, 1], [1, 1]]), [1]).clusters == [[0, 1]]


def test_matching_groups_default_is_all_columns():
    part = find_matching_row_groups(M([[0, 1], [0, 1], [1, 0]]))
    assert part.defining_columns.members == (0, 1)
    assert part.matching_groups() == [[0, 1]]


def report_of(sets):
    return DeadEndTestReport([ColumnSet(s) for s in sets], None, True, 0.0, "none")


def test_importance_examples():
    assert column_importance(report_of([(0,), (1,)]), 2) == [(0, 1, 0.5), (1, 1, 0.5)]
    assert column_importance(report_of([(0, 1)]), 3) == [(0, 1, 1.0), (1, 1, 1.0), (2, 0, 0.0)]
    assert column_importance(report_of([(0,), (0, 1)]), 2) == [(0, 2, 1.0), (1, 1, 0.5)]
    with pytest.raises(EmptyReport):
        column_importance(report_of([]), 2)


# -- properties over random small matrices ---------------------------------

small_matrix = st.tuples(st.integers(1, 7), st.integers(1, 7)).flatmap(
    lambda nm: st.tuples(
        st.lists(st.integers(2, 4), min_size=nm[1], max_size=nm[1]),
        st.integers(0, 2**32 - 1),
        st.just(nm[0]),
    )
)


def build(data, distinct=True):
    sizes, seed, n = data
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, sizes, size=(n, len(sizes)))
    if distinct:
        uniq = []
        for r in rows.tolist():
            if r not in uniq:
                uniq.append(r)
        rows = uniq
    return rows, sizes


@settings(max_examples=60, deadline=None)
@given(small_matrix)
def test_monotone_in_columns(data):
    rows, sizes = build(data, distinct=False)
    m = len(sizes)
    mat = M(rows, sizes)
    subsets = [s for r in range(m + 1) for s in itertools.combinations(range(m), r)]
    tests = {s for s in subsets if is_test(mat, s)}
    for s in tests:
        for c in range(m):
            assert tuple(sorted(set(s) | {c})) in tests


@settings(max_examples=60, deadline=None)
@given(small_matrix)
def test_hitting_set_equivalence(data):
    rows, sizes = build(data)
    m = len(sizes)
    mat = M(rows, sizes)
    reduced = [set(c) for c in discernibility(mat).reduced]
    for r in range(m + 1):
        for s in itertools.combinations(range(m), r):
            hits = all(set(s) & f for f in reduced)
            assert hits == is_test(mat, s) == brute_is_test(rows, s)


@settings(max_examples=80, deadline=None)
@given(small_matrix)
def test_enumeration_complete_minimal_extending(data):
    rows, sizes = build(data)
    m = len(sizes)
    mat = M(rows, sizes)
    rep = enumerate_dead_end_tests(mat, max_count=None, time_budget=None)
    assert rep.exhausted
    assert members(rep) == brute_dead_end_tests(rows, m)
    found = [set(t) for t in rep.tests]
    for a in found:
        assert not any(a < b or b < a for b in found if b is not a)
    for t in rep.tests:
        assert is_dead_end_test(mat, t)
    for r in range(m + 1):
        for s in itertools.combinations(range(m), r):
            if brute_is_test(rows, s):
                assert any(t <= set(s) for t in found)
    res = min_test_length(mat, time_budget=None)
    assert res.exact and res.value == rep.min_length
    assert res.value >= pigeonhole_bound(sizes, len(rows))


@settings(max_examples=60, deadline=None)
@given(small_matrix, st.data())
def test_partition_refines(data, draw):
    rows, sizes = build(data, distinct=False)
    m = len(sizes)
    mat = M(rows, sizes)
    t = draw.draw(st.sets(st.integers(0, m - 1)))
    s = draw.draw(st.sets(st.sampled_from(sorted(t)))) if t else set()
    ps = find_matching_row_groups(mat, s)
    pt = find_matching_row_groups(mat, t)
    assert sorted(i for c in pt.clusters for i in c) == list(range(len(rows)))
    label = {i: k for k, c in enumerate(ps.clusters) for i in c}
    for c in pt.clusters:
        assert len({label[i] for i in c}) == 1
    for c in pt.clusters:
        for a, b in itertools.combinations(c, 2):
            assert all(rows[a][j] == rows[b][j] for j in t)
