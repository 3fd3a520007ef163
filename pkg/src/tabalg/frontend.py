"""Restricted SQL dialect: parser and compiler to computational graphs.

The dialect covers single-table SELECT queries with WHERE (comparisons, IN
lists, AND/OR), GROUP BY, HAVING, ORDER BY and LIMIT, with aggregate calls
and term-wise arithmetic in value positions, plus one level of scalar
subquery.  Anything else is rejected, never approximated.

Column names may contain spaces; they are resolved by longest match against
the actual table header (backtick quoting is also accepted).  The grammar is
documented in docs/sql-grammar.ebnf.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .errors import SqlSyntaxError, UnknownColumn, UnsupportedConstruct
from .graph import GraphBuilder, GraphNode
from .ops import AGG_FUNCS, Operator, OpKind
from .values import Cell, Table, parse_cell

# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Constant:
    cell: Cell


@dataclass(frozen=True)
class AggregateCall:
    func: str
    column: str  # "*" maps to the row-index column


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Subquery:
    query: "SqlAst"


Expr = Union[ColumnRef, Constant, AggregateCall, Arith, Subquery]


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Expr
    right: Optional[Expr] = None
    constants: tuple[Cell, ...] = ()


@dataclass(frozen=True)
class BoolExpr:
    op: str  # "and" | "or"
    left: "Pred"
    right: "Pred"


Pred = Union[Comparison, BoolExpr]


@dataclass(frozen=True)
class OrderSpec:
    expr: Expr
    direction: str


@dataclass(frozen=True)
class SqlAst:
    select: Expr
    table_name: str
    where: Optional[Pred] = None
    group_by: tuple[str, ...] = ()
    having: Optional[Pred] = None
    order: Optional[OrderSpec] = None
    limit: Optional[int] = None


_UNSUPPORTED_WORDS = (
    "join",
    "union",
    "intersect",
    "except",
    "distinct",
    "not",
    "like",
    "between",
    "is",
    "case",
    "over",
    "exists",
)

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

ID_COLUMN = "id"


class _Cursor:
    def __init__(self, text: str, columns: tuple[str, ...]):
        self.text = text
        self.pos = 0
        # longest header names first so multi-word names win over prefixes
        self.columns = sorted(columns, key=len, reverse=True)

    def error(self, expected: str) -> SqlSyntaxError:
        return SqlSyntaxError(self.pos, expected)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def eof(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def _boundary(self, end: int) -> bool:
        return end >= len(self.text) or not (self.text[end].isalnum() or self.text[end] == "_")

    def try_keyword(self, *words: str) -> bool:
        self.skip_ws()
        pos = self.pos
        for word in words:
            self.skip_ws()
            end = self.pos + len(word)
            if self.text[self.pos : end].lower() != word or not self._boundary(end):
                self.pos = pos
                return False
            self.pos = end
        return True

    def peek_keyword(self, *words: str) -> bool:
        pos = self.pos
        ok = self.try_keyword(*words)
        self.pos = pos
        return ok

    def expect_keyword(self, *words: str) -> None:
        if not self.try_keyword(*words):
            raise self.error(" ".join(words).upper())

    def try_symbol(self, symbol: str) -> bool:
        self.skip_ws()
        if self.text.startswith(symbol, self.pos):
            self.pos += len(symbol)
            return True
        return False

    def peek_symbol(self, symbol: str) -> bool:
        self.skip_ws()
        return self.text.startswith(symbol, self.pos)

    def expect_symbol(self, symbol: str) -> None:
        if not self.try_symbol(symbol):
            raise self.error(repr(symbol))

    def match_number(self) -> Optional[str]:
        self.skip_ws()
        m = _NUMBER_RE.match(self.text, self.pos)
        if not m or not self._boundary(m.end()):
            return None
        self.pos = m.end()
        return m.group()

    def match_string(self) -> Optional[str]:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != "'":
            return None
        out = []
        i = self.pos + 1
        while i < len(self.text):
            ch = self.text[i]
            if ch == "'":
                if self.text.startswith("''", i):
                    out.append("'")
                    i += 2
                    continue
                self.pos = i + 1
                return "".join(out)
            out.append(ch)
            i += 1
        raise self.error("closing quote")

    def match_column(self) -> Optional[str]:
        """Longest case-insensitive match of a header name (or backtick quoted)."""
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "`":
            end = self.text.find("`", self.pos + 1)
            if end < 0:
                raise self.error("closing backtick")
            raw = self.text[self.pos + 1 : end]
            self.pos = end + 1
            for name in self.columns:
                if name.lower() == raw.strip().lower():
                    return name
            raise UnknownColumn(raw)
        window = self.text[self.pos :].lower()
        for name in self.columns:
            if window.startswith(name.lower()) and self._boundary(self.pos + len(name)):
                self.pos += len(name)
                return name
        return None

    def match_word(self) -> Optional[str]:
        self.skip_ws()
        m = _WORD_RE.match(self.text, self.pos)
        if not m:
            return None
        self.pos = m.end()
        return m.group()


class _Parser:
    def __init__(self, text: str, header: tuple[str, ...]):
        columns = tuple(header)
        if not any(n.lower() == ID_COLUMN for n in columns):
            columns = columns + (ID_COLUMN,)
        self.cur = _Cursor(text, columns)

    # -- entry -----------------------------------------------------------

    def parse(self, depth: int = 0) -> SqlAst:
        cur = self.cur
        cur.expect_keyword("select")
        if cur.peek_keyword("distinct"):
            raise UnsupportedConstruct("DISTINCT")
        select = self.expr(depth)
        if cur.try_symbol(","):
            raise UnsupportedConstruct("multiple select columns")
        cur.expect_keyword("from")
        table_name = cur.match_word()
        if table_name is None:
            raise cur.error("table name")
        self._reject_unsupported()
        where = None
        if cur.try_keyword("where"):
            where = self.pred(depth)
            self._reject_unsupported()
        group_by: tuple[str, ...] = ()
        if cur.try_keyword("group", "by"):
            cols = [self.column_ref().name]
            while cur.try_symbol(","):
                cols.append(self.column_ref().name)
            group_by = tuple(cols)
        having = None
        if cur.try_keyword("having"):
            if not group_by:
                raise UnsupportedConstruct("HAVING without GROUP BY")
            having = self.pred(depth)
        order = None
        if cur.try_keyword("order", "by"):
            expr = self.expr(depth)
            direction = "asc"
            if cur.try_keyword("desc"):
                direction = "desc"
            elif cur.try_keyword("asc"):
                direction = "asc"
            order = OrderSpec(expr, direction)
        limit = None
        if cur.try_keyword("limit"):
            raw = cur.match_number()
            if raw is None or "." in raw or int(raw) < 1:
                raise cur.error("positive integer limit")
            limit = int(raw)
        if depth == 0:
            cur.try_symbol(";")
            if not cur.eof():
                self._reject_unsupported()
                raise cur.error("end of query")
        return SqlAst(select, table_name, where, group_by, having, order, limit)

    def _reject_unsupported(self) -> None:
        cur = self.cur
        for word in _UNSUPPORTED_WORDS:
            if cur.peek_keyword(word):
                raise UnsupportedConstruct(word.upper())

    # -- expressions -------------------------------------------------------

    _RESERVED = frozenset(
        "select from where group by having order limit asc desc in and or".split()
    )

    def column_ref(self) -> ColumnRef:
        name = self.cur.match_column()
        if name is None:
            mark = self.cur.pos
            word = self.cur.match_word()
            if word is not None and word.lower() not in self._RESERVED:
                raise UnknownColumn(word)
            self.cur.pos = mark
            raise self.cur.error("column name")
        return ColumnRef(name)

    def expr(self, depth: int) -> Expr:
        node = self.term(depth)
        while True:
            if self.cur.try_symbol("+"):
                node = Arith("+", node, self.term(depth))
            elif self.cur.try_symbol("-"):
                node = Arith("-", node, self.term(depth))
            else:
                return node

    def term(self, depth: int) -> Expr:
        node = self.factor(depth)
        while True:
            if self.cur.try_symbol("*"):
                node = Arith("*", node, self.factor(depth))
            elif self.cur.try_symbol("/"):
                node = Arith("/", node, self.factor(depth))
            else:
                return node

    def factor(self, depth: int) -> Expr:
        cur = self.cur
        raw = cur.match_number()
        if raw is not None:
            return Constant(parse_cell(raw))
        if cur.try_symbol("-"):
            raw = cur.match_number()
            if raw is None:
                raise cur.error("number after unary minus")
            return Constant(parse_cell("-" + raw))
        s = cur.match_string()
        if s is not None:
            return Constant(parse_cell(s))
        for func in AGG_FUNCS:
            if cur.peek_keyword(func):
                mark = cur.pos
                cur.try_keyword(func)
                if cur.try_symbol("("):
                    if cur.try_symbol("*"):
                        column = "*"
                    else:
                        column = self.column_ref().name
                    cur.expect_symbol(")")
                    return AggregateCall(func, column)
                cur.pos = mark  # a column could legitimately be named e.g. "count"
                break
        if cur.peek_symbol("("):
            mark = cur.pos
            cur.try_symbol("(")
            if cur.peek_keyword("select"):
                if depth >= 1:
                    raise UnsupportedConstruct("nested subquery")
                inner = self.parse(depth + 1)
                cur.expect_symbol(")")
                if not isinstance(inner.select, AggregateCall) or inner.group_by:
                    raise UnsupportedConstruct("non-scalar subquery")
                return Subquery(inner)
            node = self.expr(depth)
            cur.expect_symbol(")")
            return node
        return self.column_ref()

    # -- predicates ----------------------------------------------------------

    def pred(self, depth: int) -> Pred:
        node = self.and_pred(depth)
        while self.cur.try_keyword("or"):
            node = BoolExpr("or", node, self.and_pred(depth))
        return node

    def and_pred(self, depth: int) -> Pred:
        node = self.atom_pred(depth)
        while self.cur.try_keyword("and"):
            node = BoolExpr("and", node, self.atom_pred(depth))
        return node

    def atom_pred(self, depth: int) -> Pred:
        cur = self.cur
        if cur.peek_symbol("(") and not self._peek_subquery():
            mark = cur.pos
            cur.try_symbol("(")
            try:
                inner = self.pred(depth)
                cur.expect_symbol(")")
                return inner
            except SqlSyntaxError:
                cur.pos = mark  # parenthesized operand, not predicate
        return self.comparison(depth)

    def _peek_subquery(self) -> bool:
        cur = self.cur
        mark = cur.pos
        ok = cur.try_symbol("(") and cur.peek_keyword("select")
        cur.pos = mark
        return ok

    def comparison(self, depth: int) -> Comparison:
        cur = self.cur
        left = self.expr(depth)
        if cur.try_keyword("in"):
            cur.expect_symbol("(")
            constants = [self._constant()]
            while cur.try_symbol(","):
                constants.append(self._constant())
            cur.expect_symbol(")")
            return Comparison("in", left, None, tuple(constants))
        for op in (">=", "<=", "!=", "<>", "="):
            if cur.try_symbol(op):
                return Comparison("!=" if op == "<>" else op, left, self.expr(depth))
        for op in (">", "<"):
            if cur.try_symbol(op):
                return Comparison(op, left, self.expr(depth))
        raise cur.error("comparison operator")

    def _constant(self) -> Cell:
        cur = self.cur
        s = cur.match_string()
        if s is not None:
            return parse_cell(s)
        raw = cur.match_number()
        if raw is not None:
            return parse_cell(raw)
        if cur.try_symbol("-"):
            raw = cur.match_number()
            if raw is not None:
                return parse_cell("-" + raw)
        raise cur.error("constant")


def parse_sql(text: str, header: tuple[str, ...] = ()) -> SqlAst:
    """Parse a query of the restricted dialect against a table header."""
    return _Parser(text, header).parse()


# -- graph construction --------------------------------------------------------


def synthesize_id_column(table: Table) -> Table:
    """Single-column table of 1-based row indices."""
    return Table(
        (ID_COLUMN,),
        tuple((Cell.number(i + 1),) for i in range(table.n_rows)),
    )


def _refs(node) -> set[str]:
    if isinstance(node, ColumnRef):
        return {node.name}
    if isinstance(node, AggregateCall):
        return {ID_COLUMN if node.column == "*" else node.column}
    if isinstance(node, Arith):
        return _refs(node.left) | _refs(node.right)
    if isinstance(node, Subquery):
        return _ast_refs(node.query)
    if isinstance(node, Comparison):
        out = _refs(node.left)
        if node.right is not None:
            out |= _refs(node.right)
        return out
    if isinstance(node, BoolExpr):
        return _refs(node.left) | _refs(node.right)
    return set()


def _ast_refs(ast: SqlAst) -> set[str]:
    out = _refs(ast.select) | set(ast.group_by)
    for part in (ast.where, ast.having):
        if part is not None:
            out |= _refs(part)
    if ast.order is not None:
        out |= _refs(ast.order.expr)
    return out


class _Compiler:
    def __init__(self, ast: SqlAst, table: Table, builder: GraphBuilder):
        self.ast = ast
        self.builder = builder
        header = [n for n in table.column_names]
        if ID_COLUMN in (r.lower() for r in _ast_refs(ast)) and not any(
            n.lower() == ID_COLUMN for n in header
        ):
            id_col = synthesize_id_column(table)
            table = Table(
                (ID_COLUMN, *table.column_names),
                tuple((idc[0], *row) for idc, row in zip(id_col.rows, table.rows)),
            )
        self.table = table
        self.source = builder.value(table)
        self.mask: Optional[GraphNode] = None
        self.group_keys: Optional[list[GraphNode]] = None
        self.having_mask: Optional[GraphNode] = None

    def column(self, name: str) -> GraphNode:
        canonical = None
        for n in self.table.column_names:
            if n == name or n.lower() == name.lower():
                canonical = n
                break
        if canonical is None:
            raise UnknownColumn(name)
        return self.builder.op(
            Operator(OpKind.PROJECTION, columns=(canonical,)), [self.source]
        )

    def filtered(self, name: str) -> GraphNode:
        node = self.column(name)
        if self.mask is not None:
            node = self.builder.op(Operator(OpKind.SELECTION), [node, self.mask])
        return node

    def grouped(self, name: str) -> GraphNode:
        node = self.builder.op(
            Operator(OpKind.GROUP_BY, key_count=len(self.group_keys)),
            [*self.group_keys, self.filtered(name)],
        )
        if self.having_mask is not None:
            node = self.builder.op(Operator(OpKind.HAVING), [node, self.having_mask])
        return node

    def constant(self, cell: Cell) -> GraphNode:
        return self.builder.value(Table(None, ((cell,),)))

    # stage: "raw" for WHERE operands, "final" for select/having/order operands
    def scalar(self, expr: Expr, stage: str) -> GraphNode:
        if isinstance(expr, Constant):
            return self.constant(expr.cell)
        if isinstance(expr, ColumnRef):
            if stage == "raw":
                return self.column(expr.name)
            if self.group_keys is not None:
                return self.grouped(expr.name)
            return self.filtered(expr.name)
        if isinstance(expr, AggregateCall):
            if stage == "raw":
                raise UnsupportedConstruct("aggregate in WHERE")
            column = ID_COLUMN if expr.column == "*" else expr.column
            operand = self.grouped(column) if self.group_keys is not None else self.filtered(column)
            return self.builder.op(Operator(OpKind.AGGREGATION, func=expr.func), [operand])
        if isinstance(expr, Arith):
            return self.builder.op(
                Operator(OpKind.TERMWISE, term_op=expr.op),
                [self.scalar(expr.left, stage), self.scalar(expr.right, stage)],
            )
        if isinstance(expr, Subquery):
            inner = _Compiler(expr.query, self.table, self.builder)
            return inner.compile()
        raise UnsupportedConstruct(type(expr).__name__)

    def predicate(self, pred: Pred, stage: str) -> GraphNode:
        if isinstance(pred, BoolExpr):
            return self.builder.op(
                Operator(OpKind.COMPARISON, comparator=pred.op),
                [self.predicate(pred.left, stage), self.predicate(pred.right, stage)],
            )
        if pred.op == "in":
            return self.builder.op(
                Operator(OpKind.COMPARISON, comparator="in", constants=pred.constants),
                [self.scalar(pred.left, stage)],
            )
        left, right, op = pred.left, pred.right, pred.op
        if isinstance(left, Constant) and not isinstance(right, Constant):
            flip = {">": "<", "<": ">", ">=": "<=", "<=": ">=", "=": "=", "!=": "!="}
            left, right, op = right, left, flip[op]
        return self.builder.op(
            Operator(OpKind.COMPARISON, comparator=op),
            [self.scalar(left, stage), self.scalar(right, stage)],
        )

    def compile(self) -> GraphNode:
        ast = self.ast
        if ast.where is not None:
            self.mask = self.predicate(ast.where, "raw")
        if ast.group_by:
            self.group_keys = [self.filtered(name) for name in ast.group_by]
            if ast.having is not None:
                # the mask itself is built over unfiltered groups, then applies
                # to every grouped column compiled afterwards
                self.having_mask = self.predicate(ast.having, "final")
        root = self.scalar(ast.select, "final")
        if ast.order is not None:
            key = self.scalar(ast.order.expr, "final")
            root = self.builder.op(
                Operator(OpKind.ORDER_BY, direction=ast.order.direction), [root, key]
            )
        if ast.limit is not None:
            root = self.builder.op(Operator(OpKind.LIMIT, k=ast.limit), [root])
        return root


def to_graph(ast: SqlAst, table: Table, builder: Optional[GraphBuilder] = None) -> GraphNode:
    """Translate a parsed query into a computational graph over the table.

    Leaves are single-column projections of the source table; shared
    sub-expressions are represented once.
    """
    return _Compiler(ast, table, builder or GraphBuilder()).compile()


def compile_sql(sql: str, table: Table, builder: Optional[GraphBuilder] = None) -> GraphNode:
    return to_graph(parse_sql(sql, table.column_names), table, builder)
