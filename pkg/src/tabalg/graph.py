"""Computational graphs over tables and their partial execution.

A graph node carries either a computed value (table, group table or boolean
column) or a parameterized operator applied to child nodes.  Graphs are
directed and acyclic; sub-results may be shared between several parents.

Partial execution walks bottom-up and replaces an operator node by the value
it computes if and only if its kind belongs to the allowed set and all of its
children have already been reduced to values; everything else stays symbolic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import ExecutionError, NotFullyReduced, TabalgError
from .ops import Operator, OpKind, apply_operator, to_answer
from .values import BoolColumn, Cell, CellKind, GroupTable, Table, Value, values_equal

Payload = Union[Value, Operator]


@dataclass(frozen=True, eq=False, slots=True)
class GraphNode:
    payload: Payload
    children: tuple["GraphNode", ...] = ()

    @property
    def is_value(self) -> bool:
        return not isinstance(self.payload, Operator)

    def __repr__(self) -> str:
        if self.is_value:
            return f"GraphNode(value:{type(self.payload).__name__})"
        return f"GraphNode({self.payload.kind.value}/{len(self.children)})"


def _value_key(value: Value):
    if isinstance(value, Table):
        return ("T", value.header, value.rows)
    if isinstance(value, GroupTable):
        return ("G", value.header, value.rows)
    return ("B", value.bits)


class GraphBuilder:
    """Graph constructor; with ``intern`` structurally equal subgraphs become
    one shared node (used by the SQL frontend so re-used sub-expressions
    unify).  Non-interning construction preserves whatever sharing the caller
    spells out, which keeps delinearization token-faithful."""

    def __init__(self, intern: bool = True):
        self._interned: Optional[dict] = {} if intern else None

    def value(self, payload: Value) -> GraphNode:
        if self._interned is None:
            return GraphNode(payload)
        key = _value_key(payload)
        node = self._interned.get(key)
        if node is None:
            node = GraphNode(payload)
            self._interned[key] = node
        return node

    def op(self, operator: Operator, children: Iterable[GraphNode]) -> GraphNode:
        children = tuple(children)
        expected = operator.arity()
        if len(children) != expected:
            raise TabalgError(
                f"{operator.kind.value} node needs {expected} children, got {len(children)}"
            )
        if self._interned is None:
            return GraphNode(operator, children)
        key = ("O", operator, tuple(id(c) for c in children))
        node = self._interned.get(key)
        if node is None:
            node = GraphNode(operator, children)
            self._interned[key] = node
        return node


def post_order(root: GraphNode) -> list[GraphNode]:
    """Deterministic post-order with child order as tie-break; shared nodes once."""
    out: list[GraphNode] = []
    seen: set[int] = set()
    stack: list[tuple[GraphNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.children):
            stack.append((child, False))
    return out


def node_ids(root: GraphNode) -> dict[int, int]:
    """Stable ids: position in the deterministic post-order."""
    return {id(n): i for i, n in enumerate(post_order(root))}


@dataclass(frozen=True)
class OperatorLevel:
    """A named cumulative set of operator kinds permitted to execute."""

    name: str
    allowed: frozenset

    def permits(self, kind: OpKind) -> bool:
        return kind in self.allowed


def _chain() -> list[OperatorLevel]:
    steps = [
        ("P", {OpKind.PROJECTION}),
        ("+C", {OpKind.COMPARISON}),
        ("+S", {OpKind.SELECTION}),
        ("+GB+H", {OpKind.GROUP_BY, OpKind.HAVING}),
        ("+OB", {OpKind.ORDER_BY}),
        ("+A", {OpKind.AGGREGATION}),
        ("+OP", {OpKind.TERMWISE}),
        ("Full", {OpKind.LIMIT}),
    ]
    levels = []
    allowed: set = set()
    for name, extra in steps:
        allowed |= extra
        levels.append(OperatorLevel(name, frozenset(allowed)))
    return levels


LEVEL_CHAIN: tuple[OperatorLevel, ...] = tuple(_chain())
LEVELS: dict[str, OperatorLevel] = {lvl.name: lvl for lvl in LEVEL_CHAIN}
FULL = LEVELS["Full"]

# Default seven-level grid; +OB stays available via --levels.
GRID_LEVEL_NAMES = ("P", "+C", "+S", "+GB+H", "+A", "+OP", "Full")


def get_level(name: str) -> OperatorLevel:
    try:
        return LEVELS[name]
    except KeyError:
        raise TabalgError(
            f"unknown operator level {name!r}; expected one of {', '.join(LEVELS)}"
        ) from None


def partial_execute(
    root: GraphNode, level: OperatorLevel, builder: Optional[GraphBuilder] = None
) -> GraphNode:
    """Reduce every allowed operator whose operands are fully computed.

    Shared nodes are reduced once.  Errors raised by an allowed operator
    propagate, annotated with the failing node id.
    """
    builder = builder or GraphBuilder()
    ids = node_ids(root)
    memo: dict[int, GraphNode] = {}

    for node in post_order(root):
        if node.is_value:
            memo[id(node)] = builder.value(node.payload)
            continue
        children = tuple(memo[id(c)] for c in node.children)
        if level.permits(node.payload.kind) and all(c.is_value for c in children):
            try:
                result = apply_operator(node.payload, [c.payload for c in children])
            except TabalgError as err:
                raise ExecutionError(ids[id(node)], err) from err
            memo[id(node)] = builder.value(result)
        else:
            memo[id(node)] = builder.op(node.payload, children)
    return memo[id(root)]


def full_execute(root: GraphNode) -> list[str]:
    """Execute everything and render the root value as an answer list."""
    reduced = partial_execute(root, FULL)
    if not reduced.is_value:
        raise NotFullyReduced("graph did not reduce to a value")
    try:
        return to_answer(reduced.payload)
    except TabalgError as err:
        if isinstance(err, (ExecutionError, NotFullyReduced)):
            raise
        raise ExecutionError(node_ids(root)[id(root)], err) from err


@dataclass(frozen=True)
class GraphStats:
    operator_count: int
    kinds_present: frozenset

    @property
    def complexity_bin(self) -> str:
        if self.operator_count < 4:
            return "1-4"
        if self.operator_count < 8:
            return "4-8"
        return "8+"


def graph_stats(root: GraphNode) -> GraphStats:
    """Operator count (shared nodes once) and the set of kinds present."""
    ops = [n.payload for n in post_order(root) if not n.is_value]
    return GraphStats(len(ops), frozenset(op.kind for op in ops))


def structural_equal(a: GraphNode, b: GraphNode) -> bool:
    """Recursive equality by content; value headers are ignored."""
    memo: set[tuple[int, int]] = set()

    def eq(x: GraphNode, y: GraphNode) -> bool:
        if (id(x), id(y)) in memo:
            return True
        if x.is_value != y.is_value:
            return False
        if x.is_value:
            ok = values_equal(x.payload, y.payload)
        else:
            ok = (
                x.payload == y.payload
                and len(x.children) == len(y.children)
                and all(eq(cx, cy) for cx, cy in zip(x.children, y.children))
            )
        if ok:
            memo.add((id(x), id(y)))
        return ok

    return eq(a, b)


# -- JSON debug form ---------------------------------------------------------


def _cell_json(c: Cell):
    if c.kind is CellKind.NULL:
        return None
    if c.kind is CellKind.NUMBER:
        from .values import render_number

        return {"n": render_number(c.value)}
    return {"s": c.value}


def _cell_from_json(j) -> Cell:
    from .values import parse_cell

    if j is None:
        return Cell(CellKind.NULL)
    if "n" in j:
        return parse_cell(j["n"])
    return Cell(CellKind.TEXT, j["s"])


def _payload_json(p: Payload):
    if isinstance(p, Table):
        return {
            "type": "table",
            "header": list(p.header) if p.header is not None else None,
            "rows": [[_cell_json(c) for c in row] for row in p.rows],
        }
    if isinstance(p, GroupTable):
        return {
            "type": "group",
            "header": list(p.header) if p.header is not None else None,
            "rows": [[[_cell_json(c) for c in g] for g in row] for row in p.rows],
        }
    if isinstance(p, BoolColumn):
        return {"type": "bool", "bits": list(p.bits)}
    out = {"type": "op", "kind": p.kind.value}
    if p.columns is not None:
        out["columns"] = list(p.columns)
    if p.comparator is not None:
        out["comparator"] = p.comparator
    if p.constants is not None:
        out["constants"] = [_cell_json(c) for c in p.constants]
    if p.func is not None:
        out["func"] = p.func
    if p.term_op is not None:
        out["term_op"] = p.term_op
    if p.direction is not None:
        out["direction"] = p.direction
    if p.k is not None:
        out["k"] = p.k
    if p.kind is OpKind.GROUP_BY:
        out["key_count"] = p.key_count
    return out


def _payload_from_json(j) -> Payload:
    t = j["type"]
    if t == "table":
        return Table(
            tuple(j["header"]) if j["header"] is not None else None,
            tuple(tuple(_cell_from_json(c) for c in row) for row in j["rows"]),
        )
    if t == "group":
        return GroupTable(
            tuple(j["header"]) if j["header"] is not None else None,
            tuple(tuple(tuple(_cell_from_json(c) for c in g) for g in row) for row in j["rows"]),
        )
    if t == "bool":
        return BoolColumn(tuple(j["bits"]))
    return Operator(
        kind=OpKind(j["kind"]),
        columns=tuple(j["columns"]) if "columns" in j else None,
        comparator=j.get("comparator"),
        constants=tuple(_cell_from_json(c) for c in j["constants"]) if "constants" in j else None,
        func=j.get("func"),
        term_op=j.get("term_op"),
        direction=j.get("direction"),
        k=j.get("k"),
        key_count=j.get("key_count", 1),
    )


def to_debug_json(root: GraphNode) -> dict:
    """Serialize as {nodes, root} with post-order node ids."""
    order = post_order(root)
    ids = {id(n): i for i, n in enumerate(order)}
    nodes = [
        {
            "id": ids[id(n)],
            "payload": _payload_json(n.payload),
            "children": [ids[id(c)] for c in n.children],
        }
        for n in order
    ]
    return {"root": ids[id(root)], "nodes": nodes}


def from_debug_json(doc: dict, builder: Optional[GraphBuilder] = None) -> GraphNode:
    builder = builder or GraphBuilder()
    by_id: dict[int, GraphNode] = {}
    for spec in doc["nodes"]:
        payload = _payload_from_json(spec["payload"])
        if isinstance(payload, Operator):
            node = builder.op(payload, [by_id[c] for c in spec["children"]])
        else:
            node = builder.value(payload)
        by_id[spec["id"]] = node
    return by_id[doc["root"]]
