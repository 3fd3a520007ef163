from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tabalg.errors import (
    CellTypeError,
    DivisionByZero,
    EmptyInput,
    IncomparableCells,
    ShapeMismatch,
    UnknownColumn,
)
from tabalg.ops import (
    aggregate,
    bool_combine,
    compare,
    group_by,
    group_keyed,
    having,
    limit,
    order_by,
    project,
    select,
    termwise,
    to_answer,
)
from tabalg.values import BoolColumn, Cell, GroupTable, NULL_CELL, Table


def col(*values, header=None):
    def cell(v):
        if v is None:
            return NULL_CELL
        if isinstance(v, (int, Fraction, float)):
            return Cell.number(Fraction(v).limit_denominator(10**9))
        return Cell.text(v)

    return Table.build([[cell(v)] for v in values], header=[header] if header else None)


SELECTED = col("newtongrange", "fauldhouse", "fauldhouse", header="East Region")
IN_CONSTANTS = (Cell.text("fauldhouse"), Cell.text("newtongrange"))


def test_project_reorders_columns():
    t = Table.build(
        [[Cell.number(1), Cell.text("x")], [Cell.number(2), Cell.text("y")]],
        header=["id", "East Region"],
    )
    p = project(t, ["East Region"])
    assert p.header == ("East Region",)
    assert [r[0].value for r in p.rows] == ["x", "y"]


def test_project_full_width_identity():
    t = Table.build([[Cell.number(1), Cell.text("x")]], header=["a", "b"])
    assert project(t, list(t.header)) == t


def test_project_unknown_column():
    t = Table.build([[Cell.number(1)]], header=["a"])
    with pytest.raises(UnknownColumn):
        project(t, ["missing"])


def test_compare_in_membership(worked_table):
    mask = compare(worked_table, None, "in", IN_CONSTANTS)
    assert mask.bits == (1, 1, 0, 0, 0, 0, 1)


def test_compare_broadcast():
    mask = compare(col(1, 2, 3), col(2), ">")
    assert mask.bits == (0, 0, 1)


def test_compare_reflexive_equality():
    t = col(1, 2, 3)
    assert compare(t, t, "=").bits == (1, 1, 1)


def test_compare_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        compare(col(1, 2, 3), col(1, 2), "=")


def test_compare_incomparable_under_order():
    with pytest.raises(IncomparableCells):
        compare(col(1, "x"), col(1), ">")


def test_compare_equality_across_kinds_is_false():
    assert compare(col(1, "1"), col(1), "=").bits == (1, 0)
    assert compare(col(1, "1"), col(1), "!=").bits == (0, 1)


def test_compare_group_distinct_value():
    g = GroupTable.build([[[Cell.number(2), Cell.number(2)]], [[Cell.number(1)]]])
    assert compare(g, col(1), ">").bits == (1, 0)
    mixed = GroupTable.build([[[Cell.number(1), Cell.number(2)]]])
    with pytest.raises(IncomparableCells):
        compare(mixed, col(1), ">")


def test_select_keeps_order(worked_table):
    mask = compare(worked_table, None, "in", IN_CONSTANTS)
    out = select(worked_table, mask)
    assert [r[0].value for r in out.rows] == ["newtongrange", "fauldhouse", "fauldhouse"]


def test_select_all_ones_and_zeros(worked_table):
    n = worked_table.n_rows
    assert select(worked_table, BoolColumn((1,) * n)) == worked_table
    empty = select(worked_table, BoolColumn((0,) * n))
    assert empty.n_rows == 0 and empty.header == worked_table.header


def test_group_by_key_order():
    g = group_by(SELECTED, ["East Region"])
    assert g.rows == (
        ((Cell.text("fauldhouse"), Cell.text("fauldhouse")),),
        ((Cell.text("newtongrange"),),),
    )


def test_group_keyed_ids():
    ids = col(1, 2, 7)
    g = group_keyed([SELECTED], ids)
    assert g.rows == (
        ((Cell.number(2), Cell.number(7)),),
        ((Cell.number(1),),),
    )


def test_group_by_all_distinct_preserves_count():
    t = col("a", "b", "c")
    g = group_by(t, ["1"])
    assert g.n_rows == 3
    assert all(len(row[0]) == 1 for row in g.rows)


def test_having_masks_groups():
    g = group_by(SELECTED, ["East Region"])
    assert having(g, BoolColumn((1, 1))) == g
    kept = having(g, BoolColumn((1, 0)))
    assert kept.n_rows == 1
    empty = having(g, BoolColumn((0, 0)))
    assert empty.n_rows == 0 and empty.header == g.header


def test_aggregate_count_per_group():
    g = group_keyed([SELECTED], col(1, 2, 7))
    out = aggregate(g, "count")
    assert [r[0].value for r in out.rows] == [2, 1]


def test_aggregate_table_examples():
    assert aggregate(col(1, 2, 3), "sum").rows[0][0] == Cell.number(6)
    assert aggregate(col(1, 2), "avg").rows[0][0] == Cell.number(Fraction(3, 2))
    assert aggregate(col(1, 2), "min").rows[0][0] == Cell.number(1)
    assert aggregate(col(1, 2), "max").rows[0][0] == Cell.number(2)


def test_aggregate_skips_nulls():
    assert aggregate(col(1, None, 3), "sum").rows[0][0] == Cell.number(4)
    assert aggregate(col(1, None, 3), "count").rows[0][0] == Cell.number(2)


def test_aggregate_errors():
    with pytest.raises(CellTypeError):
        aggregate(col("x"), "sum")
    with pytest.raises(EmptyInput):
        aggregate(col(None), "avg")
    # sum over nothing is zero, not an error
    assert aggregate(col(None), "sum").rows[0][0] == Cell.number(0)


def test_termwise_examples():
    assert [r[0].value for r in termwise(col(1, 2), col(3, 4), "+").rows] == [4, 6]
    assert termwise(col(5), col(5), "-").rows[0][0] == Cell.number(0)
    with pytest.raises(DivisionByZero):
        termwise(col(1), col(0), "/")
    assert termwise(col(1, 2, 3), col(2), "*").rows == termwise(col(1, 2, 3), col(2, 2, 2), "*").rows


def test_termwise_type_error():
    with pytest.raises(CellTypeError):
        termwise(col("x"), col(1), "+")


def test_order_by_grouped_count_desc():
    g = group_by(SELECTED, ["East Region"])
    counts = col(2, 1)
    out = order_by(g, counts, "desc")
    assert out.rows == g.rows  # fauldhouse group already first


def test_order_by_stability_constant_key():
    t = col("c", "a", "b")
    assert order_by(t, col(1, 1, 1), "asc") == t
    assert order_by(t, col(1, 1, 1), "desc") == t


def test_order_by_null_keys_sort_last():
    t = col("a", "b", "c")
    out = order_by(t, col(2, None, 1), "asc")
    assert [r[0].value for r in out.rows] == ["c", "a", "b"]


def test_limit_examples():
    g = group_by(SELECTED, ["East Region"])
    assert limit(g, 1).rows == (g.rows[0],)
    t = col(1, 2)
    assert limit(t, 5) == t
    assert limit(Table.build([], header=["a"]), 1).n_rows == 0


def test_to_answer_group_distinct():
    g = group_by(SELECTED, ["East Region"])
    assert to_answer(limit(g, 1)) == ["fauldhouse"]


def test_to_answer_examples():
    assert to_answer(col(1000)) == ["1000"]
    assert to_answer(Table.build([], header=["a"])) == []
    assert to_answer(BoolColumn((1, 0))) == ["t", "f"]
    mixed_group = GroupTable.build([[[Cell.text("a"), Cell.text("b")]]])
    assert to_answer(mixed_group) == ["a, b"]


def test_bool_combine():
    a, b = BoolColumn((1, 0, 1)), BoolColumn((1, 1, 0))
    assert bool_combine(a, b, "and").bits == (1, 0, 0)
    assert bool_combine(a, b, "or").bits == (1, 1, 1)


# -- properties -----------------------------------------------------------------

cell_values = st.one_of(
    st.integers(-50, 50),
    st.sampled_from(["fauldhouse", "alpha", "beta", "x", ""]),
)


@st.composite
def tables_with_masks(draw):
    n = draw(st.integers(0, 8))
    values = draw(st.lists(cell_values, min_size=n, max_size=n))
    bits = draw(st.lists(st.sampled_from([0, 1]), min_size=n, max_size=n))
    rows = [[Cell.number(v) if isinstance(v, int) else Cell.text(v)] for v in values]
    return Table.build(rows, header=["c"]), BoolColumn(tuple(bits))


@given(tables_with_masks())
def test_select_row_count_is_mask_sum(pair):
    table, mask = pair
    out = select(table, mask)
    assert out.n_rows == sum(mask.bits)
    kept = [r for r, b in zip(table.rows, mask.bits) if b]
    assert list(out.rows) == kept


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=8), st.integers(-20, 20))
def test_compare_broadcast_equivalence(values, pivot):
    t = col(*values)
    broadcast = compare(t, col(pivot), "<")
    replicated = compare(t, col(*([pivot] * len(values))), "<")
    assert broadcast == replicated


@given(st.lists(cell_values, min_size=1, max_size=10))
def test_group_by_partitions(values):
    rows = [[Cell.number(v) if isinstance(v, int) else Cell.text(v)] for v in values]
    t = Table.build(rows, header=["c"])
    g = group_by(t, ["c"])
    regrouped = sorted(
        (m.kind.value, str(m.value)) for row in g.rows for m in row[0]
    )
    original = sorted((c.kind.value, str(c.value)) for row in t.rows for c in row)
    assert regrouped == original
    counts = aggregate(g, "count")
    non_null = sum(1 for row in t.rows if not row[0].is_null)
    assert sum(r[0].value for r in counts.rows) == non_null


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=8))
def test_order_by_asc_desc_are_reversals(keys):
    data = col(*range(len(keys)))
    key = col(*keys)
    asc = order_by(data, key, "asc")
    desc = order_by(data, key, "desc")
    if len(set(keys)) == len(keys):  # strict keys: exact reversal
        assert list(asc.rows) == list(reversed(desc.rows))
    ranks_asc = [keys[int(r[0].value)] for r in asc.rows]
    assert ranks_asc == sorted(keys)


@given(st.lists(st.integers(-20, 20), min_size=0, max_size=8), st.integers(1, 5), st.integers(1, 5))
def test_limit_composition(values, a, b):
    t = col(*values) if values else Table.build([], header=["c"])
    assert limit(limit(t, a), b) == limit(t, min(a, b))
