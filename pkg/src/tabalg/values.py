"""Value model: cells, tables, group tables and boolean columns.

Cells are exact: numbers are stored as :class:`fractions.Fraction` so that
aggregation results are reproducible bit for bit, and every number that the
toolkit stores is a finite decimal (operators that could produce repeating
expansions quantize their results, see :mod:`tabalg.ops`).

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import ShapeMismatch

# Optional sign, digits with optional well-formed thousands separators,
# optional fraction.  "1,000" is a number, "1,00" is text.
_DECIMAL_RE = re.compile(r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?")


class CellKind(enum.Enum):
    NUMBER = "number"
    TEXT = "text"
    NULL = "null"


@dataclass(frozen=True, slots=True)
class Cell:
    """Atomic table value: an exact decimal number, a string, or missing."""

    kind: CellKind
    value: Union[Fraction, str, None] = None

    @staticmethod
    def number(value) -> "Cell":
        return Cell(CellKind.NUMBER, Fraction(value))

    @staticmethod
    def text(value: str) -> "Cell":
        if value == "":
            return NULL_CELL
        return Cell(CellKind.TEXT, value)

    @property
    def is_null(self) -> bool:
        return self.kind is CellKind.NULL

    @property
    def is_number(self) -> bool:
        return self.kind is CellKind.NUMBER

    @property
    def is_text(self) -> bool:
        return self.kind is CellKind.TEXT

    def __repr__(self) -> str:  # compact; used heavily in test failure output
        if self.is_null:
            return "Cell(null)"
        if self.is_number:
            return f"Cell({render_cell(self)})"
        return f"Cell({self.value!r})"


NULL_CELL = Cell(CellKind.NULL)


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1
    INCOMPARABLE = 2


def parse_cell(text: str) -> Cell:
    """Total: number if the whole trimmed text is a decimal, else text; empty -> null."""
    trimmed = text.strip()
    if trimmed == "":
        return NULL_CELL
    if _DECIMAL_RE.fullmatch(trimmed):
        digits = trimmed.replace(",", "")
        if "." in digits:
            whole, frac = digits.split(".")
            return Cell(CellKind.NUMBER, Fraction(int(whole + frac), 10 ** len(frac)))
        return Cell(CellKind.NUMBER, Fraction(int(digits)))
    return Cell(CellKind.TEXT, trimmed)


def render_number(value: Fraction) -> str:
    """Canonical decimal rendering, trailing zeros stripped, no separators."""
    n, d = value.numerator, value.denominator
    sign = "-" if n < 0 else ""
    n = abs(n)
    if d == 1:
        return f"{sign}{n}"
    # Finite decimals only: d = 2^a * 5^b.  Anything else was quantized upstream;
    # quantize defensively here so rendering stays total.
    a = 0
    rest = d
    while rest % 2 == 0:
        rest //= 2
        a += 1
    b = 0
    while rest % 5 == 0:
        rest //= 5
        b += 1
    if rest != 1:
        return render_number(quantize(value))
    exp = max(a, b)
    scaled = n * 10**exp // d
    digits = str(scaled).rjust(exp + 1, "0")
    whole, frac = digits[:-exp], digits[-exp:]
    frac = frac.rstrip("0")
    if not frac:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac}"


DEFAULT_PRECISION = 10


def quantize(value: Fraction, precision: int = DEFAULT_PRECISION) -> Fraction:
    """Round to ``precision`` fractional digits (half-even), keeping exactness."""
    scaled = value * 10**precision
    n, d = scaled.numerator, scaled.denominator
    q, r = divmod(n, d)
    # round half to even on the remainder
    if 2 * r > d or (2 * r == d and q % 2 != 0):
        q += 1
    return Fraction(q, 10**precision)


def render_cell(cell: Cell) -> str:
    """Raw rendering: numbers canonical, null as the empty string."""
    if cell.is_null:
        return ""
    if cell.is_number:
        return render_number(cell.value)
    return cell.value


def compare_cells(a: Cell, b: Cell) -> Ordering:
    """Number/number numeric, text/text case-insensitive lexicographic,
    null equals only null; anything across kinds is incomparable."""
    if a.is_null or b.is_null:
        return Ordering.EQUAL if a.is_null and b.is_null else Ordering.INCOMPARABLE
    if a.kind is not b.kind:
        return Ordering.INCOMPARABLE
    if a.is_number:
        x, y = a.value, b.value
    else:
        x, y = a.value.lower(), b.value.lower()
    if x < y:
        return Ordering.LESS
    if x > y:
        return Ordering.GREATER
    return Ordering.EQUAL


def cells_equal(a: Cell, b: Cell) -> bool:
    return compare_cells(a, b) is Ordering.EQUAL


def sort_key(cell: Cell):
    """Total ordering for Order By: numbers first, then texts, null last."""
    if cell.is_number:
        return (0, cell.value)
    if cell.is_text:
        return (1, cell.value.lower())
    return (2, 0)


def group_key(cell: Cell):
    """Canonical grouping key; case-insensitive for text."""
    if cell.is_number:
        return ("n", cell.value)
    if cell.is_text:
        return ("t", cell.value.lower())
    return ("0",)


def _check_rect(rows: Sequence[Sequence], what: str) -> None:
    if not rows:
        return
    width = len(rows[0])
    if width == 0:
        raise ShapeMismatch(f"{what} with rows must have at least one column")
    for r in rows:
        if len(r) != width:
            raise ShapeMismatch(f"ragged {what}: expected {width} cells per row, got {len(r)}")


@dataclass(frozen=True, slots=True)
class Table:
    """Ordered matrix of cells with an optional header.

    Row order is significant and preserved by every operation.  When no header
    is given, column names are the 1-based indices rendered as strings.
    """

    header: Optional[tuple[str, ...]]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        _check_rect(self.rows, "table")
        if self.header is not None and self.rows and len(self.header) != len(self.rows[0]):
            raise ShapeMismatch(
                f"header has {len(self.header)} names but rows have {len(self.rows[0])} cells"
            )

    @staticmethod
    def build(rows: Iterable[Iterable[Cell]], header: Optional[Iterable[str]] = None) -> "Table":
        return Table(tuple(header) if header is not None else None, tuple(tuple(r) for r in rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        if self.rows:
            return len(self.rows[0])
        return len(self.header) if self.header else 0

    @property
    def column_names(self) -> tuple[str, ...]:
        if self.header is not None:
            return self.header
        return tuple(str(i + 1) for i in range(self.n_cols))

    def column(self, index: int) -> tuple[Cell, ...]:
        return tuple(r[index] for r in self.rows)


@dataclass(frozen=True, slots=True)
class GroupTable:
    """Matrix whose cells are ordered multisets of cells, produced by grouping."""

    header: Optional[tuple[str, ...]]
    rows: tuple[tuple[tuple[Cell, ...], ...], ...]

    def __post_init__(self):
        _check_rect(self.rows, "group table")
        for row in self.rows:
            sizes = {len(g) for g in row}
            if len(sizes) > 1:
                raise ShapeMismatch("group cardinality differs across columns of one row")

    @staticmethod
    def build(rows, header=None) -> "GroupTable":
        return GroupTable(
            tuple(header) if header is not None else None,
            tuple(tuple(tuple(g) for g in row) for row in rows),
        )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else (len(self.header) if self.header else 0)


@dataclass(frozen=True, slots=True)
class BoolColumn:
    """Single logical column of 0/1 bits."""

    bits: tuple[int, ...]

    def __post_init__(self):
        for b in self.bits:
            if b not in (0, 1):
                raise ShapeMismatch("bool column bits must be 0 or 1")

    @property
    def n_rows(self) -> int:
        return len(self.bits)


Value = Union[Table, GroupTable, BoolColumn]


def is_single_column(value: Value) -> bool:
    if isinstance(value, BoolColumn):
        return True
    return value.n_cols == 1 or (value.n_rows == 0 and value.n_cols <= 1)


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality on content; headers are resolution metadata and
    do not survive linearization, so they are ignored here."""
    if type(a) is not type(b):
        return False
    if isinstance(a, BoolColumn):
        return a.bits == b.bits
    return a.rows == b.rows


def load_table(path: Union[str, Path], delimiter: str = "\t") -> Table:
    """Load a table from TSV/CSV: first row is the header, empty cells are null."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    if not rows:
        return Table(None, ())
    header = tuple(name.strip() for name in rows[0])
    body = []
    for raw in rows[1:]:
        padded = list(raw) + [""] * (len(header) - len(raw))
        body.append(tuple(parse_cell(c) for c in padded[: len(header)]))
    return Table(header, tuple(body))


def save_table(table: Table, path: Union[str, Path], delimiter: str = "\t") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if table.header is not None:
            writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([render_cell(c) for c in row])
