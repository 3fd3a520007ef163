"""Bidirectional conversion between graphs and token sequences.

Six schemes: pre-order and post-order, each inline or with aliases, and with
aliases the value payloads are grouped before or after the operator records.
Separators are normative and bit-exact: " || " between items, " ||| " between
the operator and table sections of alias schemes, " | " between value rows,
", " between columns and ",, " between group members; every sequence ends
with " ||".

Cells render raw text with backslash escapes for the separator characters,
plus a leading escape wherever a re-parse would change the cell's type or an
item would collide with operator grammar; this makes every sequence uniquely
decodable, which the paper's display markup is not.

Post-order is the exact itemwise reversal of pre-order (operands are visited
last-to-first), matching the published worked examples.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import ArityError, ParseError, TabalgError, UnresolvedAlias
from .graph import GraphBuilder, GraphNode
from .ops import AGG_FUNCS, Operator, OpKind, apply_operator
from .values import (
    NULL_CELL,
    BoolColumn,
    Cell,
    CellKind,
    GroupTable,
    Table,
    Value,
    parse_cell,
    render_cell,
)

# -- schemes -------------------------------------------------------------------


@dataclass(frozen=True)
class LinearizationScheme:
    order: str  # "pre" | "post"
    aliases: bool = False
    table_position: Optional[str] = None  # "start" | "end", alias schemes only

    def __post_init__(self):
        if self.order not in ("pre", "post"):
            raise TabalgError(f"unknown traversal order {self.order!r}")
        if self.aliases:
            if self.table_position not in ("start", "end"):
                raise TabalgError("alias schemes place tables at 'start' or 'end'")
        elif self.table_position is not None:
            raise TabalgError("inline schemes interleave tables at operand position")

    @property
    def name(self) -> str:
        if not self.aliases:
            return self.order
        return f"{self.order}-alias-{self.table_position}"


SCHEMES: dict[str, LinearizationScheme] = {
    s.name: s
    for s in (
        LinearizationScheme("pre"),
        LinearizationScheme("post"),
        LinearizationScheme("pre", True, "start"),
        LinearizationScheme("pre", True, "end"),
        LinearizationScheme("post", True, "start"),
        LinearizationScheme("post", True, "end"),
    )
}


def get_scheme(name: str) -> LinearizationScheme:
    try:
        return SCHEMES[name]
    except KeyError:
        raise TabalgError(
            f"unknown linearization scheme {name!r}; expected one of {', '.join(SCHEMES)}"
        ) from None


ITEM_SEP = " || "
SECTION_SEP = " ||| "
ROW_SEP = " | "
COL_SEP = ", "
MEMBER_SEP = ",, "
TRAILER = " ||"

EMPTY_TABLE_MARK = "\\E"
EMPTY_GROUP_MARK = "\\G"
EMPTY_BOOL_MARK = "\\B"
GROUP_MARK_PREFIX = "\\G "  # group table without any multi-member group

_ALIAS_RE = re.compile(r"N(\d+)")


# -- cell and value rendering ---------------------------------------------------


def _escape_chars(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace(",", "\\,")


def _render_cell_token(cell: Cell) -> str:
    base = render_cell(cell)
    token = _escape_chars(base)
    if cell.is_text:
        reparsed = parse_cell(base)
        if base in ("t", "f") or not (reparsed.is_text and reparsed.value == base):
            token = "\\" + token
    return token


def _unescape_cell_token(token: str) -> Cell:
    out = []
    escaped = False
    i = 0
    while i < len(token):
        ch = token[i]
        if ch == "\\" and i + 1 < len(token):
            out.append(token[i + 1])
            escaped = True
            i += 2
        else:
            out.append(ch)
            i += 1
    text = "".join(out)
    if escaped:
        return _forced_text(text)
    return parse_cell(text)


def _forced_text(text: str) -> Cell:
    if text == "":
        return NULL_CELL
    return Cell(CellKind.TEXT, text)


def _split_escaped(text: str, separators: tuple[str, ...]) -> list[tuple[str, Optional[str]]]:
    """Split on unescaped separators; longest-first at each position.

    Returns (piece, separator_that_followed) pairs; the last pair has None.
    """
    pieces = []
    current = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            current.append(text[i : i + 2])
            i += 2
            continue
        hit = None
        for sep in separators:
            if text.startswith(sep, i):
                hit = sep
                break
        if hit is not None:
            pieces.append(("".join(current), hit))
            current = []
            i += len(hit)
        else:
            current.append(text[i])
            i += 1
    pieces.append(("".join(current), None))
    return pieces


def linearize_value(value: Value) -> str:
    """Render a value: rows joined " | ", columns ", ", group members ",, ",
    boolean bits as t/f.  Degenerate shapes the published markup cannot
    express carry an escape marker."""
    if isinstance(value, BoolColumn):
        if not value.bits:
            return EMPTY_BOOL_MARK
        return ROW_SEP.join("t" if b else "f" for b in value.bits)
    if isinstance(value, Table):
        if not value.rows:
            return EMPTY_TABLE_MARK
        return ROW_SEP.join(
            COL_SEP.join(_render_cell_token(c) for c in row) for row in value.rows
        )
    if not value.rows:
        return EMPTY_GROUP_MARK
    rendered = ROW_SEP.join(
        COL_SEP.join(MEMBER_SEP.join(_render_cell_token(m) for m in g) for g in row)
        for row in value.rows
    )
    if not any(len(g) > 1 for row in value.rows for g in row):
        return GROUP_MARK_PREFIX + rendered
    return rendered


def _parse_group_row(row_text: str) -> tuple[tuple[Cell, ...], ...]:
    groups: list[list[Cell]] = [[]]
    for piece, sep in _split_escaped(row_text, (MEMBER_SEP, COL_SEP)):
        groups[-1].append(_unescape_cell_token(piece))
        if sep == COL_SEP:
            groups.append([])
    return tuple(tuple(g) for g in groups)


def parse_value(token: str) -> Value:
    """Inverse of :func:`linearize_value`."""
    if token == EMPTY_TABLE_MARK:
        return Table(None, ())
    if token == EMPTY_GROUP_MARK:
        return GroupTable(None, ())
    if token == EMPTY_BOOL_MARK:
        return BoolColumn(())
    forced_group = False
    if token.startswith(GROUP_MARK_PREFIX):
        forced_group = True
        token = token[len(GROUP_MARK_PREFIX) :]
    rows_raw = [piece for piece, _ in _split_escaped(token, (ROW_SEP,))]
    if not forced_group and all(r in ("t", "f") for r in rows_raw):
        return BoolColumn(tuple(1 if r == "t" else 0 for r in rows_raw))
    grouped = forced_group or any(
        sep == MEMBER_SEP for r in rows_raw for _, sep in _split_escaped(r, (MEMBER_SEP,))
    )
    if grouped:
        return GroupTable(None, tuple(_parse_group_row(r) for r in rows_raw))
    rows = tuple(
        tuple(_unescape_cell_token(p) for p, _ in _split_escaped(r, (COL_SEP,)))
        for r in rows_raw
    )
    return Table(None, rows)


# -- operator tokens -------------------------------------------------------------


def _render_constant(cell: Cell) -> str:
    if cell.is_number:
        return render_cell(cell)
    text = "" if cell.is_null else cell.value
    return "'" + _escape_chars(text.replace("'", "''")) + "'"


def operator_token(op: Operator) -> str:
    if op.kind is OpKind.SELECTION:
        return "WHERE"
    if op.kind is OpKind.HAVING:
        return "HAVING"
    if op.kind is OpKind.GROUP_BY:
        return "GB" if op.key_count == 1 else f"GB {op.key_count}"
    if op.kind is OpKind.ORDER_BY:
        return f"OB {op.direction}"
    if op.kind is OpKind.LIMIT:
        return f"Limit {op.k}"
    if op.kind is OpKind.AGGREGATION:
        return op.func.upper()
    if op.kind is OpKind.TERMWISE:
        return op.term_op
    if op.kind is OpKind.COMPARISON:
        if op.comparator in ("and", "or"):
            return op.comparator.upper()
        if op.comparator == "in":
            return "IN " + COL_SEP.join(_render_constant(c) for c in op.constants)
        return op.comparator
    raise TabalgError("projection nodes linearize as their computed column")


_OP_HEADS = {
    "WHERE",
    "HAVING",
    "GB",
    "OB",
    "LIMIT",
    "AND",
    "OR",
    "IN",
    "+",
    "-",
    "*",
    "/",
    "=",
    "!=",
    ">",
    "<",
    ">=",
    "<=",
} | {f.upper() for f in AGG_FUNCS}


def _item_escape(rendered: str) -> str:
    head = rendered.split(" ", 1)[0] if rendered else rendered
    if head.upper() in _OP_HEADS:
        return "\\" + rendered
    return rendered


_DIRECTIONS = ("asc", "desc")


class _OpToken:
    """Parsed operator item: the operator plus its arity."""

    def __init__(self, operator: Operator):
        self.operator = operator
        self.arity = operator.arity()


def _parse_constants(text: str, position: int) -> tuple[list[Cell], str]:
    """Parse "c1, c2, ..." leaving any remainder (used for child aliases)."""
    constants: list[Cell] = []
    rest = text
    while True:
        rest = rest.lstrip(" ")
        if rest.startswith("'"):
            out = []
            i = 1
            while i < len(rest):
                if rest[i] == "'":
                    if rest.startswith("''", i):
                        out.append("'")
                        i += 2
                        continue
                    break
                if rest[i] == "\\" and i + 1 < len(rest):
                    out.append(rest[i + 1])
                    i += 2
                    continue
                out.append(rest[i])
                i += 1
            else:
                raise ParseError(position, "unterminated constant")
            raw = "".join(out)
            constants.append(NULL_CELL if raw == "" else _forced_text(raw))
            rest = rest[i + 1 :]
        else:
            m = re.match(r"-?\d+(?:\.\d+)?", rest)
            if not m:
                raise ParseError(position, "expected a constant")
            constants.append(parse_cell(m.group()))
            rest = rest[m.end() :]
        if rest.startswith(","):
            rest = rest[1:]
            continue
        return constants, rest.lstrip(" ")


def _parse_operator_item(item: str, position: int) -> Optional[_OpToken]:
    head, _, rest = item.partition(" ")
    up = head.upper()
    if up not in _OP_HEADS:
        return None
    if up == "WHERE" and not rest:
        return _OpToken(Operator(OpKind.SELECTION))
    if up == "HAVING" and not rest:
        return _OpToken(Operator(OpKind.HAVING))
    if up == "GB":
        if not rest:
            return _OpToken(Operator(OpKind.GROUP_BY, key_count=1))
        if rest.isdigit() and int(rest) >= 1:
            return _OpToken(Operator(OpKind.GROUP_BY, key_count=int(rest)))
        raise ParseError(position, f"bad group-by item {item!r}")
    if up == "OB":
        if rest.lower() in _DIRECTIONS:
            return _OpToken(Operator(OpKind.ORDER_BY, direction=rest.lower()))
        raise ParseError(position, f"bad order-by item {item!r}")
    if up == "LIMIT":
        if rest.isdigit() and int(rest) >= 1:
            return _OpToken(Operator(OpKind.LIMIT, k=int(rest)))
        raise ParseError(position, f"bad limit item {item!r}")
    if up in ("AND", "OR") and not rest:
        return _OpToken(Operator(OpKind.COMPARISON, comparator=up.lower()))
    if up == "IN":
        constants, remainder = _parse_constants(rest, position)
        if remainder:
            raise ParseError(position, f"unexpected text after IN list: {remainder!r}")
        return _OpToken(Operator(OpKind.COMPARISON, comparator="in", constants=tuple(constants)))
    if up in {f.upper() for f in AGG_FUNCS} and not rest:
        return _OpToken(Operator(OpKind.AGGREGATION, func=up.lower()))
    if head in ("+", "-", "*", "/") and not rest:
        return _OpToken(Operator(OpKind.TERMWISE, term_op=head))
    if head in (">", "<", ">=", "<=", "=", "!=") and not rest:
        return _OpToken(Operator(OpKind.COMPARISON, comparator=head))
    return None


# -- linearization ---------------------------------------------------------------


def _effective(node: GraphNode, memo: dict) -> GraphNode:
    """Projection over a computed table stands for its resulting column."""
    got = memo.get(id(node))
    if got is not None:
        return got
    out = node
    if (
        not node.is_value
        and node.payload.kind is OpKind.PROJECTION
        and all(c.is_value for c in node.children)
    ):
        out = GraphNode(apply_operator(node.payload, [c.payload for c in node.children]))
    memo[id(node)] = out
    return out


def _inline_items(root: GraphNode, order: str) -> list[str]:
    memo: dict = {}
    items: list[str] = []

    def visit(node: GraphNode) -> None:
        node = _effective(node, memo)
        if node.is_value:
            items.append(_item_escape(linearize_value(node.payload)))
            return
        items.append(operator_token(node.payload))
        for child in node.children:
            visit(child)

    visit(root)
    if order == "post":
        items.reverse()
    return items


def _alias_records(
    root: GraphNode, order: str, memo: dict
) -> tuple[list[GraphNode], list[GraphNode]]:
    """Operator records and value records in emission order (shared nodes once)."""
    seen: set[int] = set()
    op_records: list[GraphNode] = []
    value_records: list[GraphNode] = []

    def visit(node: GraphNode) -> None:
        node = _effective(node, memo)
        if id(node) in seen:
            return
        seen.add(id(node))
        if node.is_value:
            value_records.append(node)
            return
        children = [_effective(c, memo) for c in node.children]
        if order == "pre":
            op_records.append(node)
            for child in children:
                visit(child)
        else:
            for child in reversed(children):
                visit(child)
            op_records.append(node)

    visit(root)
    return op_records, value_records


def linearize(root: GraphNode, scheme: LinearizationScheme) -> str:
    """Render a (partially executed) graph as a token sequence."""
    if not scheme.aliases:
        return ITEM_SEP.join(_inline_items(root, scheme.order)) + TRAILER

    memo: dict = {}
    op_records, value_records = _alias_records(root, scheme.order, memo)
    if scheme.table_position == "start":
        ordered: list[GraphNode] = [*value_records, *op_records]
    else:
        ordered = [*op_records, *value_records]

    aliases: dict[int, int] = {}

    def mention(node: GraphNode) -> str:
        if id(node) not in aliases:
            aliases[id(node)] = len(aliases) + 1
        return f"N{aliases[id(node)]}"

    rendered: dict[int, str] = {}
    for node in ordered:
        own = mention(node)
        if node.is_value:
            rendered[id(node)] = f"{own} {_item_escape(linearize_value(node.payload))}"
        else:
            refs = " ".join(mention(_effective(c, memo)) for c in node.children)
            rendered[id(node)] = f"{own} {operator_token(node.payload)} {refs}"

    sections = []
    op_text = ITEM_SEP.join(rendered[id(n)] for n in op_records)
    value_text = ITEM_SEP.join(rendered[id(n)] for n in value_records)
    if scheme.table_position == "start":
        sections = [value_text, op_text]
    else:
        sections = [op_text, value_text]
    sections = [s for s in sections if s]
    return SECTION_SEP.join(sections) + TRAILER


# -- delinearization --------------------------------------------------------------


def _split_items(text: str) -> list[str]:
    return [p for p, _ in _split_escaped(text, (ITEM_SEP,))]


def _parse_inline(items: list[str], order: str, builder: GraphBuilder) -> GraphNode:
    if order == "post":
        items = list(reversed(items))
    pos = 0

    def parse_node() -> GraphNode:
        nonlocal pos
        if pos >= len(items):
            raise ParseError(pos, "unexpected end of sequence")
        item = items[pos]
        pos += 1
        op = _parse_operator_item(item, pos - 1)
        if op is None:
            return builder.value(parse_value(item))
        # reversing a post-order sequence yields the pre-order item stream,
        # so children already come out in their original order here
        children = [parse_node() for _ in range(op.arity)]
        return builder.op(op.operator, children)

    root = parse_node()
    if pos != len(items):
        raise ParseError(pos, f"{len(items) - pos} trailing item(s)")
    return root


def _parse_alias(text: str, builder: GraphBuilder) -> GraphNode:
    sections = [p for p, _ in _split_escaped(text, (SECTION_SEP,))]
    if len(sections) > 2:
        raise ParseError(0, "more than two sections")
    items = [item for section in sections for item in _split_items(section)]

    ops: dict[str, tuple[_OpToken, list[str], int]] = {}
    values: dict[str, Value] = {}
    referenced: list[str] = []
    for position, item in enumerate(items):
        head, _, rest = item.partition(" ")
        if not _ALIAS_RE.fullmatch(head):
            raise ParseError(position, f"expected an alias, got {item!r}")
        if head in ops or head in values:
            raise ParseError(position, f"alias {head} defined twice")
        op = _parse_operator_item_with_refs(rest, position)
        if op is None:
            values[head] = parse_value(rest)
        else:
            token, refs = op
            if len(refs) != token.arity:
                raise ArityError(operator_token(token.operator).split(" ")[0], token.arity, len(refs))
            ops[head] = (token, refs, position)
            referenced.extend(refs)

    if not items:
        raise ParseError(0, "empty sequence")
    ref_set = set(referenced)
    roots = [h for h in list(ops) + list(values) if h not in ref_set]
    if len(roots) != 1:
        raise ParseError(0, f"expected one root record, found {len(roots)}")

    building: set[str] = set()
    built: dict[str, GraphNode] = {}

    def build(alias: str) -> GraphNode:
        if alias in built:
            return built[alias]
        if alias in building:
            raise ParseError(0, f"alias cycle through {alias}")
        building.add(alias)
        if alias in values:
            node = builder.value(values[alias])
        elif alias in ops:
            token, refs, _ = ops[alias]
            node = builder.op(token.operator, [build(r) for r in refs])
        else:
            raise UnresolvedAlias(alias)
        building.discard(alias)
        built[alias] = node
        return node

    return build(roots[0])


def _parse_operator_item_with_refs(text: str, position: int):
    """Operator content of an alias record: token, params, then child aliases."""
    head, _, rest = text.partition(" ")
    up = head.upper()
    if up not in _OP_HEADS:
        return None
    if up == "IN":
        constants, remainder = _parse_constants(rest, position)
        refs = remainder.split(" ") if remainder else []
        if not all(_ALIAS_RE.fullmatch(r) for r in refs):
            raise ParseError(position, f"bad child references {remainder!r}")
        return (
            _OpToken(Operator(OpKind.COMPARISON, comparator="in", constants=tuple(constants))),
            refs,
        )
    tokens = [head] + ([t for t in rest.split(" ") if t] if rest else [])
    refs: list[str] = []
    while tokens and _ALIAS_RE.fullmatch(tokens[-1]):
        refs.insert(0, tokens.pop())
    op = _parse_operator_item(" ".join(tokens), position)
    if op is None:
        return None
    return op, refs


def delinearize(
    seq: str, scheme: LinearizationScheme, builder: Optional[GraphBuilder] = None
) -> GraphNode:
    """Reconstruct a graph whose linearization round-trips token for token.

    Sharing follows the sequence: alias references resolve to one node, while
    repeated inline payloads stay separate nodes, so re-linearizing under the
    same scheme reproduces the input exactly.
    """
    builder = builder or GraphBuilder(intern=False)
    text = seq
    if text.endswith(TRAILER):
        text = text[: -len(TRAILER)]
    if not scheme.aliases:
        return _parse_inline(_split_items(text), scheme.order, builder)
    return _parse_alias(text, builder)


# -- encoder input ----------------------------------------------------------------


@dataclass(frozen=True)
class EncodedInput:
    tokens: str
    visible_row_count: int


def encode_input(question: str, table: Table, max_tokens: int) -> EncodedInput:
    """Flatten a question and table with [HEAD]/[ROW] delimiters, appending
    rows while the whitespace-token budget allows; reports how many rows fit."""
    parts = [question] if question else []
    parts.append("[HEAD]")
    parts.append(ROW_SEP.join(table.column_names))
    text = " ".join(parts)
    visible = 0
    for i, row in enumerate(table.rows, start=1):
        candidate = f"{text} [ROW] {i} " + ROW_SEP.join(render_cell(c) for c in row)
        if len(candidate.split()) > max_tokens:
            break
        text = candidate
        visible = i
    return EncodedInput(text, visible)
