"""Error taxonomy shared by the whole toolkit.

Every error carries a stable ``code`` string so that batch tools and
foreign-language callers can dispatch on it without parsing messages.
"""

from __future__ import annotations


class TabalgError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "TabalgError"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_dict(self) -> dict:
        d = {"code": self.code, "message": self.message}
        d.update({k: v for k, v in self.details.items() if v is not None})
        return d


class UnknownColumn(TabalgError):
    code = "UnknownColumn"

    def __init__(self, name: str):
        super().__init__(f"unknown column: {name!r}", name=name)


class ShapeMismatch(TabalgError):
    code = "ShapeMismatch"


class IncomparableCells(TabalgError):
    code = "IncomparableCells"


class CellTypeError(TabalgError):
    code = "TypeError"


class EmptyInput(TabalgError):
    code = "EmptyInput"


class DivisionByZero(TabalgError):
    code = "DivisionByZero"


class SqlSyntaxError(TabalgError):
    code = "SyntaxError"

    def __init__(self, position: int, expected: str):
        super().__init__(
            f"syntax error at position {position}: expected {expected}",
            position=position,
            expected=expected,
        )
        self.position = position
        self.expected = expected


class UnsupportedConstruct(TabalgError):
    code = "UnsupportedConstruct"

    def __init__(self, name: str):
        super().__init__(f"unsupported construct: {name}", name=name)
        self.name = name


class ExecutionError(TabalgError):
    """Wraps an algebra error with the id of the failing graph node."""

    code = "ExecutionError"

    def __init__(self, node_id: int, cause: TabalgError):
        super().__init__(
            f"node {node_id}: [{cause.code}] {cause.message}",
            node_id=node_id,
            cause=cause.code,
        )
        self.node_id = node_id
        self.cause = cause


class NotFullyReduced(TabalgError):
    code = "NotFullyReduced"


class ParseError(TabalgError):
    """Malformed linearized sequence."""

    code = "ParseError"

    def __init__(self, position: int, reason: str):
        super().__init__(f"bad sequence at item {position}: {reason}", position=position, reason=reason)
        self.position = position
        self.reason = reason


class UnresolvedAlias(TabalgError):
    code = "UnresolvedAlias"

    def __init__(self, name: str):
        super().__init__(f"unresolved alias: {name}", name=name)
        self.name = name


class ArityError(TabalgError):
    code = "ArityError"

    def __init__(self, opname: str, expected: int, got: int):
        super().__init__(
            f"operator {opname} takes {expected} operand(s), got {got}",
            opname=opname,
            expected=expected,
            got=got,
        )
        self.opname = opname


class MissingId(TabalgError):
    code = "MissingId"

    def __init__(self, query_id: str):
        super().__init__(f"prediction references unknown query id: {query_id}", query_id=query_id)
