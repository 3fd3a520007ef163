"""Executable semantics for the table algebra operators.

Nine operator kinds manipulate tables, group tables and boolean columns:
projection, comparison, selection, group-by, having, aggregation, term-wise
arithmetic, order-by and limit.  All functions are pure and total over their
stated preconditions; violations raise errors from :mod:`tabalg.errors`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import (
    CellTypeError,
    DivisionByZero,
    EmptyInput,
    IncomparableCells,
    ShapeMismatch,
    UnknownColumn,
)
from .values import (
    BoolColumn,
    Cell,
    GroupTable,
    Ordering,
    Table,
    Value,
    cells_equal,
    compare_cells,
    group_key,
    is_single_column,
    quantize,
    render_cell,
    sort_key,
)


class OpKind(enum.Enum):
    PROJECTION = "projection"
    COMPARISON = "comparison"
    SELECTION = "selection"
    GROUP_BY = "group_by"
    HAVING = "having"
    AGGREGATION = "aggregation"
    TERMWISE = "termwise"
    ORDER_BY = "order_by"
    LIMIT = "limit"


ORDER_COMPARATORS = (">", "<", ">=", "<=")
EQUALITY_COMPARATORS = ("=", "!=")
BOOL_CONNECTIVES = ("and", "or")
COMPARATORS = ORDER_COMPARATORS + EQUALITY_COMPARATORS + ("in",) + BOOL_CONNECTIVES
AGG_FUNCS = ("sum", "avg", "count", "min", "max")
TERM_OPS = ("+", "-", "*", "/")
DIRECTIONS = ("asc", "desc")


@dataclass(frozen=True, slots=True)
class Operator:
    """An operator kind plus its parameters (the payload of a graph node).

    ``columns`` parameterizes projection; ``key_count`` tells a group-by node
    how many leading children are grouping keys (the last child is the column
    being grouped).
    """

    kind: OpKind
    columns: Optional[tuple[str, ...]] = None
    comparator: Optional[str] = None
    constants: Optional[tuple[Cell, ...]] = None
    func: Optional[str] = None
    term_op: Optional[str] = None
    direction: Optional[str] = None
    k: Optional[int] = None
    key_count: int = 1

    def __post_init__(self):
        if self.kind is OpKind.PROJECTION and not self.columns:
            raise ShapeMismatch("projection needs at least one column")
        if self.kind is OpKind.COMPARISON:
            if self.comparator not in COMPARATORS:
                raise ShapeMismatch(f"unknown comparator {self.comparator!r}")
            if self.comparator == "in" and not self.constants:
                raise ShapeMismatch("IN needs a non-empty constant list")
        if self.kind is OpKind.AGGREGATION and self.func not in AGG_FUNCS:
            raise ShapeMismatch(f"unknown aggregation {self.func!r}")
        if self.kind is OpKind.TERMWISE and self.term_op not in TERM_OPS:
            raise ShapeMismatch(f"unknown term-wise operator {self.term_op!r}")
        if self.kind is OpKind.ORDER_BY and self.direction not in DIRECTIONS:
            raise ShapeMismatch(f"unknown direction {self.direction!r}")
        if self.kind is OpKind.LIMIT and (self.k is None or self.k < 1):
            raise ShapeMismatch("limit needs k >= 1")
        if self.kind is OpKind.GROUP_BY and self.key_count < 1:
            raise ShapeMismatch("group-by needs at least one key")

    def arity(self) -> int:
        if self.kind in (OpKind.PROJECTION, OpKind.AGGREGATION, OpKind.LIMIT):
            return 1
        if self.kind is OpKind.COMPARISON:
            return 1 if self.comparator == "in" else 2
        if self.kind is OpKind.GROUP_BY:
            return self.key_count + 1
        return 2


def _resolve_column(table: Table, name: str) -> int:
    names = table.column_names
    for i, n in enumerate(names):
        if n == name:
            return i
    lowered = name.lower()
    for i, n in enumerate(names):
        if n.lower() == lowered:
            return i
    raise UnknownColumn(name)


def project(table: Table, columns: Sequence[str]) -> Table:
    """Extract the named columns, preserving row order."""
    if not isinstance(table, Table):
        raise CellTypeError("projection operates on a table")
    idx = [_resolve_column(table, name) for name in columns]
    header = tuple(table.column_names[i] for i in idx)
    return Table(header, tuple(tuple(row[i] for i in idx) for row in table.rows))


def _single_cells(value: Union[Table, GroupTable]) -> list:
    if not is_single_column(value):
        raise ShapeMismatch("expected a single-column operand")
    return [row[0] for row in value.rows]


def _group_distinct(group: tuple[Cell, ...]) -> Cell:
    if not group:
        raise EmptyInput("empty group has no value")
    first = group[0]
    for member in group[1:]:
        if not cells_equal(first, member):
            raise IncomparableCells("group holds more than one distinct value")
    return first


def _relate(a: Cell, b: Cell, comparator: str) -> int:
    ordering = compare_cells(a, b)
    if comparator == "=":
        return 1 if ordering is Ordering.EQUAL else 0
    if comparator == "!=":
        return 0 if ordering is Ordering.EQUAL else 1
    if ordering is Ordering.INCOMPARABLE:
        raise IncomparableCells(
            f"cannot order {render_cell(a)!r} against {render_cell(b)!r}"
        )
    if comparator == ">":
        return 1 if ordering is Ordering.GREATER else 0
    if comparator == "<":
        return 1 if ordering is Ordering.LESS else 0
    if comparator == ">=":
        return 1 if ordering is not Ordering.LESS else 0
    if comparator == "<=":
        return 1 if ordering is not Ordering.GREATER else 0
    raise ShapeMismatch(f"unknown comparator {comparator!r}")


def compare(
    t1: Union[Table, GroupTable],
    t2: Optional[Table],
    comparator: str,
    constants: tuple[Cell, ...] = (),
) -> BoolColumn:
    """Row-wise comparison producing a boolean column.

    ``t2`` must have the same number of rows as ``t1`` or exactly one row,
    which is broadcast.  For ``in`` the right operand is ignored and each
    cell is tested for membership in the constant list; a group matches when
    all of its members do.  A group table on the left otherwise contributes
    its single distinct value per group.
    """
    if isinstance(t1, BoolColumn):
        raise CellTypeError("comparison left operand must be a table or group table")
    left = _single_cells(t1)
    grouped = isinstance(t1, GroupTable)
    if comparator == "in":
        bits = []
        for item in left:
            members = item if grouped else (item,)
            ok = bool(members) and all(
                any(cells_equal(m, c) for c in constants) for m in members
            )
            bits.append(1 if ok else 0)
        return BoolColumn(tuple(bits))
    if not isinstance(t2, Table):
        raise CellTypeError("comparison right operand must be a table")
    right = _single_cells(t2)
    if len(right) not in (len(left), 1):
        raise ShapeMismatch(
            f"cannot compare {len(left)} rows against {len(right)} rows"
        )
    bits = []
    for i, item in enumerate(left):
        a = _group_distinct(item) if grouped else item
        b = right[0] if len(right) == 1 else right[i]
        bits.append(_relate(a, b, comparator))
    return BoolColumn(tuple(bits))


def bool_combine(a: BoolColumn, b: BoolColumn, connective: str) -> BoolColumn:
    if not isinstance(a, BoolColumn) or not isinstance(b, BoolColumn):
        raise CellTypeError("boolean connective operates on boolean columns")
    if a.n_rows != b.n_rows:
        raise ShapeMismatch("boolean columns differ in length")
    if connective == "and":
        return BoolColumn(tuple(x & y for x, y in zip(a.bits, b.bits)))
    if connective == "or":
        return BoolColumn(tuple(x | y for x, y in zip(a.bits, b.bits)))
    raise ShapeMismatch(f"unknown connective {connective!r}")


def select(table: Table, mask: BoolColumn) -> Table:
    """Keep rows where the mask is true, preserving order."""
    if not isinstance(table, Table) or not isinstance(mask, BoolColumn):
        raise CellTypeError("selection operates on a table and a boolean column")
    if mask.n_rows != table.n_rows:
        raise ShapeMismatch(
            f"mask has {mask.n_rows} rows, table has {table.n_rows}"
        )
    return Table(table.header, tuple(r for r, b in zip(table.rows, mask.bits) if b))


def group_rows(key_columns: Sequence[Sequence[Cell]], n_rows: int) -> list[list[int]]:
    """Partition row indices by composite key, groups ordered by ascending key."""
    buckets: dict = {}
    order_keys: dict = {}
    for i in range(n_rows):
        key = tuple(group_key(col[i]) for col in key_columns)
        buckets.setdefault(key, []).append(i)
        order_keys.setdefault(key, tuple(sort_key(col[i]) for col in key_columns))
    return [buckets[k] for k in sorted(buckets, key=lambda k: order_keys[k])]


def group_by(table: Table, columns: Sequence[str]) -> GroupTable:
    """Group every column of the table by equal values in the named columns."""
    if not isinstance(table, Table):
        raise CellTypeError("group-by operates on a table")
    idx = [_resolve_column(table, name) for name in columns]
    groups = group_rows([table.column(i) for i in idx], table.n_rows)
    rows = tuple(
        tuple(tuple(table.rows[i][c] for i in members) for c in range(table.n_cols))
        for members in groups
    )
    return GroupTable(table.header, rows)


def group_keyed(key_columns: Sequence[Table], data: Table) -> GroupTable:
    """Group the single data column by the composite key columns."""
    if not isinstance(data, Table):
        raise CellTypeError("group-by data must be a table")
    cells = _single_cells(data)
    keys = []
    for key_table in key_columns:
        if not isinstance(key_table, Table):
            raise CellTypeError("group-by keys must be tables")
        col = _single_cells(key_table)
        if len(col) != len(cells):
            raise ShapeMismatch("group-by key and data differ in length")
        keys.append(col)
    groups = group_rows(keys, len(cells))
    return GroupTable(data.header, tuple((tuple(cells[i] for i in members),) for members in groups))


def having(grouped: GroupTable, mask: BoolColumn) -> GroupTable:
    """Keep group rows where the mask is true, preserving order."""
    if not isinstance(grouped, GroupTable) or not isinstance(mask, BoolColumn):
        raise CellTypeError("having operates on a group table and a boolean column")
    if mask.n_rows != grouped.n_rows:
        raise ShapeMismatch(
            f"mask has {mask.n_rows} rows, group table has {grouped.n_rows}"
        )
    return GroupTable(grouped.header, tuple(r for r, b in zip(grouped.rows, mask.bits) if b))


def _finite(value: Fraction) -> Fraction:
    d = value.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    return value if d == 1 else quantize(value)


def _aggregate_cells(cells: Sequence[Cell], func: str) -> Cell:
    present = [c for c in cells if not c.is_null]
    if func == "count":
        return Cell.number(len(present))
    for c in present:
        if not c.is_number:
            raise CellTypeError(f"cannot apply {func} to text value {render_cell(c)!r}")
    numbers = [c.value for c in present]
    if func == "sum":
        return Cell.number(sum(numbers, Fraction(0)))
    if not numbers:
        raise EmptyInput(f"{func} over no non-null values")
    if func == "avg":
        return Cell.number(_finite(sum(numbers, Fraction(0)) / len(numbers)))
    if func == "min":
        return Cell.number(min(numbers))
    return Cell.number(max(numbers))


def aggregate(value: Union[Table, GroupTable], func: str) -> Table:
    """Aggregate a single column: one row in total for a table, one row per
    group for a group table."""
    if isinstance(value, Table):
        return Table(None, ((_aggregate_cells(_single_cells(value), func),),))
    if isinstance(value, GroupTable):
        groups = _single_cells(value)
        return Table(None, tuple((_aggregate_cells(g, func),) for g in groups))
    raise CellTypeError("aggregation operates on a table or group table")


def termwise(t1: Table, t2: Table, op: str) -> Table:
    """Row-wise arithmetic over two numeric columns; one side may broadcast."""
    if not isinstance(t1, Table) or not isinstance(t2, Table):
        raise CellTypeError("term-wise arithmetic operates on tables")
    left, right = _single_cells(t1), _single_cells(t2)
    if len(left) != len(right):
        if len(left) == 1:
            left = left * len(right)
        elif len(right) == 1:
            right = right * len(left)
        else:
            raise ShapeMismatch(
                f"cannot combine {len(left)} rows with {len(right)} rows"
            )
    out = []
    for a, b in zip(left, right):
        if not a.is_number or not b.is_number:
            raise CellTypeError("term-wise arithmetic needs numeric cells")
        x, y = a.value, b.value
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        else:
            if y == 0:
                raise DivisionByZero(f"{render_cell(a)} / 0")
            r = _finite(x / y)
        out.append((Cell.number(r),))
    return Table(None, tuple(out))


def order_by(data: Union[Table, GroupTable], key: Union[Table, GroupTable], direction: str) -> Union[Table, GroupTable]:
    """Stable sort of the data rows by the key column; group keys contribute
    their single distinct value."""
    if isinstance(data, BoolColumn) or isinstance(key, BoolColumn):
        raise CellTypeError("order-by operates on tables or group tables")
    key_cells = _single_cells(key)
    if isinstance(key, GroupTable):
        key_cells = [_group_distinct(g) for g in key_cells]
    if len(key_cells) != data.n_rows:
        raise ShapeMismatch(
            f"key has {len(key_cells)} rows, data has {data.n_rows}"
        )
    order = sorted(range(len(key_cells)), key=lambda i: sort_key(key_cells[i]), reverse=(direction == "desc"))
    rows = tuple(data.rows[i] for i in order)
    if isinstance(data, Table):
        return Table(data.header, rows)
    return GroupTable(data.header, rows)


def limit(value: Union[Table, GroupTable], k: int) -> Union[Table, GroupTable]:
    """First ``min(k, n_rows)`` rows."""
    if isinstance(value, Table):
        return Table(value.header, value.rows[:k])
    if isinstance(value, GroupTable):
        return GroupTable(value.header, value.rows[:k])
    raise CellTypeError("limit operates on a table or group table")


def to_answer(value: Value) -> list[str]:
    """Render a single-column value as an ordered answer list.

    A group renders its distinct value when all members are equal, otherwise
    the members joined in group order.
    """
    if isinstance(value, BoolColumn):
        return ["t" if b else "f" for b in value.bits]
    if not is_single_column(value):
        raise ShapeMismatch("answers come from single-column values")
    out = []
    for row in value.rows:
        item = row[0]
        if isinstance(value, GroupTable):
            if item and all(cells_equal(item[0], m) for m in item[1:]):
                out.append(render_cell(item[0]))
            else:
                out.append(", ".join(render_cell(m) for m in item))
        else:
            out.append(render_cell(item))
    return out


def apply_operator(op: Operator, operands: Sequence[Value]) -> Value:
    """Apply a parameterized operator to already-computed operand values."""
    expected = op.arity()
    if len(operands) != expected:
        raise ShapeMismatch(
            f"{op.kind.value} takes {expected} operand(s), got {len(operands)}"
        )
    if op.kind is OpKind.PROJECTION:
        return project(operands[0], op.columns)
    if op.kind is OpKind.COMPARISON:
        if op.comparator in BOOL_CONNECTIVES:
            return bool_combine(operands[0], operands[1], op.comparator)
        if op.comparator == "in":
            return compare(operands[0], None, "in", op.constants)
        return compare(operands[0], operands[1], op.comparator)
    if op.kind is OpKind.SELECTION:
        return select(operands[0], operands[1])
    if op.kind is OpKind.GROUP_BY:
        return group_keyed(operands[: op.key_count], operands[op.key_count])
    if op.kind is OpKind.HAVING:
        return having(operands[0], operands[1])
    if op.kind is OpKind.AGGREGATION:
        return aggregate(operands[0], op.func)
    if op.kind is OpKind.TERMWISE:
        return termwise(operands[0], operands[1], op.term_op)
    if op.kind is OpKind.ORDER_BY:
        return order_by(operands[0], operands[1], op.direction)
    return limit(operands[0], op.k)
