"""Deliberately naive reference interpreter.

Walks a computational graph as a tree: no memoization, no sharing, every
operand recomputed at every occurrence.  Operator semantics are implemented
here from scratch (plain loops, stdlib ``decimal`` for inexact division)
so the fast executor can be checked against an independent code path.
Intended for verification and for computing trusted gold answers; never used
by the pipeline itself.
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_EVEN, localcontext
from fractions import Fraction

from .errors import (
    CellTypeError,
    DivisionByZero,
    EmptyInput,
    IncomparableCells,
    ShapeMismatch,
    UnknownColumn,
)
from .graph import GraphNode
from .ops import Operator, OpKind
from .values import BoolColumn, Cell, CellKind, GroupTable, Table, Value, render_cell


def _rank(cell: Cell) -> int:
    if cell.kind is CellKind.NUMBER:
        return 0
    if cell.kind is CellKind.TEXT:
        return 1
    return 2


def _same(a: Cell, b: Cell) -> bool:
    if a.kind is not b.kind:
        return False
    if a.kind is CellKind.NULL:
        return True
    if a.kind is CellKind.NUMBER:
        return a.value == b.value
    return a.value.lower() == b.value.lower()


def _column_of(value) -> list:
    if isinstance(value, BoolColumn):
        raise ShapeMismatch("expected a single-column operand")
    if value.rows and len(value.rows[0]) != 1:
        raise ShapeMismatch("expected a single-column operand")
    return [row[0] for row in value.rows]


def _only(group) -> Cell:
    if not group:
        raise EmptyInput("empty group has no value")
    for member in group[1:]:
        if not _same(group[0], member):
            raise IncomparableCells("group holds more than one distinct value")
    return group[0]


def _round_decimal(value: Fraction) -> Fraction:
    d = value.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1:
        return value
    with localcontext() as ctx:
        ctx.prec = 60
        dec = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
            Decimal(1).scaleb(-10), rounding=ROUND_HALF_EVEN
        )
    return Fraction(dec)


def _order_bit(a: Cell, b: Cell, comparator: str) -> int:
    if a.kind is not b.kind or a.kind is CellKind.NULL:
        eq = _same(a, b)
        if comparator == "=":
            return 1 if eq else 0
        if comparator == "!=":
            return 0 if eq else 1
        if eq:  # two nulls are equal, hence not strictly ordered
            return 1 if comparator in (">=", "<=") else 0
        raise IncomparableCells("mixed kinds under an order comparator")
    x = a.value if a.kind is CellKind.NUMBER else a.value.lower()
    y = b.value if b.kind is CellKind.NUMBER else b.value.lower()
    if comparator == "=":
        return 1 if x == y else 0
    if comparator == "!=":
        return 1 if x != y else 0
    if comparator == ">":
        return 1 if x > y else 0
    if comparator == "<":
        return 1 if x < y else 0
    if comparator == ">=":
        return 1 if x >= y else 0
    return 1 if x <= y else 0


def _apply(op: Operator, args: list) -> Value:
    kind = op.kind
    if kind is OpKind.PROJECTION:
        table = args[0]
        if not isinstance(table, Table):
            raise CellTypeError("projection over a non-table")
        indices = []
        for name in op.columns:
            names = table.column_names
            found = None
            for i, n in enumerate(names):
                if n == name:
                    found = i
                    break
            if found is None:
                for i, n in enumerate(names):
                    if n.lower() == name.lower():
                        found = i
                        break
            if found is None:
                raise UnknownColumn(name)
            indices.append(found)
        return Table(
            tuple(table.column_names[i] for i in indices),
            tuple(tuple(row[i] for i in indices) for row in table.rows),
        )

    if kind is OpKind.COMPARISON:
        if op.comparator in ("and", "or"):
            a, b = args
            if not isinstance(a, BoolColumn) or not isinstance(b, BoolColumn):
                raise CellTypeError("connective over non-boolean operands")
            if len(a.bits) != len(b.bits):
                raise ShapeMismatch("connective over different lengths")
            if op.comparator == "and":
                return BoolColumn(tuple(1 if (x and y) else 0 for x, y in zip(a.bits, b.bits)))
            return BoolColumn(tuple(1 if (x or y) else 0 for x, y in zip(a.bits, b.bits)))
        if op.comparator == "in":
            left = args[0]
            if isinstance(left, BoolColumn):
                raise CellTypeError("IN over a boolean column")
            bits = []
            for row in left.rows:
                if len(row) != 1:
                    raise ShapeMismatch("IN over a multi-column operand")
                members = row[0] if isinstance(left, GroupTable) else [row[0]]
                ok = len(members) > 0
                for m in members:
                    if not any(_same(m, c) for c in op.constants):
                        ok = False
                        break
                bits.append(1 if ok else 0)
            return BoolColumn(tuple(bits))
        left, right = args
        if isinstance(left, BoolColumn) or not isinstance(right, Table):
            raise CellTypeError("comparison operands must be tables")
        lcells = _column_of(left)
        if isinstance(left, GroupTable):
            lcells = [_only(g) for g in lcells]
        rcells = _column_of(right)
        if len(rcells) == 1 and len(lcells) != 1:
            rcells = rcells * len(lcells)
        if len(rcells) != len(lcells):
            raise ShapeMismatch("comparison length mismatch")
        return BoolColumn(
            tuple(_order_bit(a, b, op.comparator) for a, b in zip(lcells, rcells))
        )

    if kind is OpKind.SELECTION:
        table, mask = args
        if not isinstance(table, Table) or not isinstance(mask, BoolColumn):
            raise CellTypeError("selection operands")
        if len(mask.bits) != len(table.rows):
            raise ShapeMismatch("selection length mismatch")
        kept = [row for row, bit in zip(table.rows, mask.bits) if bit]
        return Table(table.header, tuple(kept))

    if kind is OpKind.HAVING:
        grouped, mask = args
        if not isinstance(grouped, GroupTable) or not isinstance(mask, BoolColumn):
            raise CellTypeError("having operands")
        if len(mask.bits) != len(grouped.rows):
            raise ShapeMismatch("having length mismatch")
        kept = [row for row, bit in zip(grouped.rows, mask.bits) if bit]
        return GroupTable(grouped.header, tuple(kept))

    if kind is OpKind.GROUP_BY:
        keys = args[: op.key_count]
        data = args[op.key_count]
        key_cols = []
        for key in keys:
            if not isinstance(key, Table):
                raise CellTypeError("group-by key must be a table")
            key_cols.append(_column_of(key))
        cells = _column_of(data)
        for col in key_cols:
            if len(col) != len(cells):
                raise ShapeMismatch("group-by length mismatch")
        order: list[tuple] = []  # (composite sortable key, first index, members)
        for i in range(len(cells)):
            composite = []
            for col in key_cols:
                c = col[i]
                composite.append(
                    (0, c.value) if c.kind is CellKind.NUMBER
                    else (1, c.value.lower()) if c.kind is CellKind.TEXT
                    else (2, 0)
                )
            composite = tuple(composite)
            for entry in order:
                if entry[0] == composite:
                    entry[2].append(i)
                    break
            else:
                order.append((composite, i, [i]))
        order.sort(key=lambda e: e[0])
        return GroupTable(
            data.header, tuple((tuple(cells[i] for i in members),) for _, _, members in order)
        )

    if kind is OpKind.AGGREGATION:
        value = args[0]
        if isinstance(value, BoolColumn):
            raise CellTypeError("aggregation over a boolean column")
        if isinstance(value, Table):
            buckets = [_column_of(value)]
        else:
            buckets = [list(g) for g in _column_of(value)]
        out = []
        for bucket in buckets:
            usable = [c for c in bucket if c.kind is not CellKind.NULL]
            if op.func == "count":
                out.append((Cell.number(len(usable)),))
                continue
            total = Fraction(0)
            for c in usable:
                if c.kind is not CellKind.NUMBER:
                    raise CellTypeError("arithmetic aggregate over text")
                total += c.value
            if op.func == "sum":
                out.append((Cell.number(total),))
                continue
            if not usable:
                raise EmptyInput("aggregate over nothing")
            if op.func == "avg":
                out.append((Cell.number(_round_decimal(total / len(usable))),))
            elif op.func == "min":
                out.append((Cell.number(min(c.value for c in usable)),))
            else:
                out.append((Cell.number(max(c.value for c in usable)),))
        return Table(None, tuple(out))

    if kind is OpKind.TERMWISE:
        t1, t2 = args
        if not isinstance(t1, Table) or not isinstance(t2, Table):
            raise CellTypeError("term-wise operands must be tables")
        a, b = _column_of(t1), _column_of(t2)
        if len(a) == 1 and len(b) > 1:
            a = a * len(b)
        if len(b) == 1 and len(a) > 1:
            b = b * len(a)
        if len(a) != len(b):
            raise ShapeMismatch("term-wise length mismatch")
        rows = []
        for x, y in zip(a, b):
            if x.kind is not CellKind.NUMBER or y.kind is not CellKind.NUMBER:
                raise CellTypeError("term-wise arithmetic over non-numbers")
            if op.term_op == "+":
                rows.append((Cell.number(x.value + y.value),))
            elif op.term_op == "-":
                rows.append((Cell.number(x.value - y.value),))
            elif op.term_op == "*":
                rows.append((Cell.number(x.value * y.value),))
            else:
                if y.value == 0:
                    raise DivisionByZero("division by zero")
                rows.append((Cell.number(_round_decimal(x.value / y.value)),))
        return Table(None, tuple(rows))

    if kind is OpKind.ORDER_BY:
        data, key = args
        if isinstance(data, BoolColumn) or isinstance(key, BoolColumn):
            raise CellTypeError("order-by operands")
        kcells = _column_of(key)
        if isinstance(key, GroupTable):
            kcells = [_only(g) for g in kcells]
        if len(kcells) != len(data.rows):
            raise ShapeMismatch("order-by length mismatch")
        decorated = []
        for i, c in enumerate(kcells):
            sortable = (
                (0, c.value) if c.kind is CellKind.NUMBER
                else (1, c.value.lower()) if c.kind is CellKind.TEXT
                else (2, 0)
            )
            decorated.append((sortable, i))
        decorated.sort(key=lambda d: d[0], reverse=(op.direction == "desc"))
        rows = tuple(data.rows[i] for _, i in decorated)
        if isinstance(data, Table):
            return Table(data.header, rows)
        return GroupTable(data.header, rows)

    if kind is OpKind.LIMIT:
        value = args[0]
        if isinstance(value, BoolColumn):
            raise CellTypeError("limit over a boolean column")
        if isinstance(value, Table):
            return Table(value.header, value.rows[: op.k])
        return GroupTable(value.header, value.rows[: op.k])

    raise CellTypeError(f"unknown operator kind {kind}")


def run_tree(node: GraphNode) -> Value:
    """Evaluate by structural recursion, recomputing shared operands."""
    if node.is_value:
        return node.payload
    args = [run_tree(child) for child in node.children]
    return _apply(node.payload, args)


def answer_tree(node: GraphNode) -> list[str]:
    """Full naive execution down to an answer list."""
    value = run_tree(node)
    if isinstance(value, BoolColumn):
        return ["t" if b else "f" for b in value.bits]
    if value.rows and len(value.rows[0]) != 1:
        raise ShapeMismatch("answers come from single-column values")
    out = []
    for row in value.rows:
        if isinstance(value, GroupTable):
            members = row[0]
            if members and all(_same(members[0], m) for m in members[1:]):
                out.append(render_cell(members[0]))
            else:
                out.append(", ".join(render_cell(m) for m in members))
        else:
            out.append(render_cell(row[0]))
    return out
