"""Denotation metrics, ensemble voting and robustness perturbation.

Strict denotation accuracy compares normalized answer multisets; flexible
accuracy first removes units (currency prefixes and a closed list of suffix
units) and canonicalizes numbers, so unit-less execution output can match
annotated answers like "$1,000" or "2005 years".
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .values import Table, parse_cell, render_cell

_NUMBER_PATTERN = r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?"


@dataclass(frozen=True)
class Denotation:
    """An answer value list; comparison is order-insensitive."""

    values: tuple[str, ...]

    @staticmethod
    def of(values: Iterable[str]) -> "Denotation":
        return Denotation(tuple(values))

    def normalized(self) -> tuple[str, ...]:
        return tuple(" ".join(v.lower().split()) for v in self.values)


@dataclass(frozen=True)
class UnitLexicon:
    """Closed unit list; the published description is open-ended, so the
    exact set is configuration."""

    currency_prefixes: tuple[str, ...] = ("$", "€", "£")
    suffix_units: tuple[str, ...] = ("years", "year", "kg", "km", "m", "%", "lbs", "pts")

    @staticmethod
    def load(path: Union[str, Path]) -> "UnitLexicon":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return UnitLexicon(
            tuple(doc.get("currency_prefixes", UnitLexicon().currency_prefixes)),
            tuple(doc.get("suffix_units", UnitLexicon().suffix_units)),
        )

    def pattern(self) -> re.Pattern:
        currency = "|".join(re.escape(c) for c in self.currency_prefixes)
        units = "|".join(
            re.escape(u) for u in sorted(self.suffix_units, key=len, reverse=True)
        )
        return re.compile(
            rf"(?:{currency})?\s*({_NUMBER_PATTERN})(?:\s*(?:{units}))?",
            re.IGNORECASE,
        )


DEFAULT_LEXICON = UnitLexicon()
_DEFAULT_PATTERN = DEFAULT_LEXICON.pattern()


def strip_units(value: str, lexicon: UnitLexicon = DEFAULT_LEXICON) -> str:
    """Remove units adjacent to a number and canonicalize numeric strings;
    non-matching values pass through trimmed.  Idempotent."""
    pattern = _DEFAULT_PATTERN if lexicon is DEFAULT_LEXICON else lexicon.pattern()
    trimmed = value.strip()
    m = pattern.fullmatch(trimmed)
    if not m:
        return trimmed
    return render_cell(parse_cell(m.group(1)))


def _multiset(values: Sequence[str], set_equality: bool):
    return frozenset(values) if set_equality else tuple(sorted(values))


def strict_da(pred: Denotation, gold: Denotation, set_equality: bool = False) -> bool:
    """True iff the normalized answers are equal, order disregarded."""
    return _multiset(pred.normalized(), set_equality) == _multiset(gold.normalized(), set_equality)


def flexible_da(
    pred: Denotation,
    gold: Denotation,
    lexicon: UnitLexicon = DEFAULT_LEXICON,
    set_equality: bool = False,
) -> bool:
    """Strict comparison after removing units from every value of both sides."""
    p = [strip_units(v, lexicon) for v in pred.normalized()]
    g = [strip_units(v, lexicon) for v in gold.normalized()]
    return _multiset(p, set_equality) == _multiset(g, set_equality)


@dataclass(frozen=True)
class ModelRun:
    """One model's predictions plus its validation score used for tie breaks."""

    model_id: str
    predictions: dict
    validation_fda: float

    def __post_init__(self):
        if not 0.0 <= self.validation_fda <= 1.0:
            raise ValueError("validation FDA must lie in [0, 1]")


def ensemble_vote(runs: Sequence[ModelRun], query_id: str) -> Denotation:
    """Majority vote over normalized answers; ties break by summed validation
    FDA, then the group holding the single best run, then lowest model id."""
    if not runs:
        raise ValueError("ensemble needs at least one run")
    groups: dict = {}
    for run in runs:
        pred = run.predictions[query_id]
        key = tuple(sorted(pred.normalized()))
        groups.setdefault(key, []).append(run)
    ranked = sorted(
        groups.values(),
        key=lambda members: (
            -len(members),
            -sum(r.validation_fda for r in members),
            -max(r.validation_fda for r in members),
            min(r.model_id for r in members),
        ),
    )
    winners = ranked[0]
    representative = min(winners, key=lambda r: r.model_id)
    return representative.predictions[query_id]


def perturb_columns(table: Table, visible_row_count: int, seed: int) -> Table:
    """Shuffle the first ``visible_row_count`` cells of every column
    independently with a seeded generator; later rows stay untouched."""
    if visible_row_count > table.n_rows:
        raise ValueError("visible row count exceeds table rows")
    columns = []
    for c in range(table.n_cols):
        cells = list(table.column(c))
        head = cells[:visible_row_count]
        rng = random.Random(seed * 1_000_003 + c)
        rng.shuffle(head)
        columns.append(head + cells[visible_row_count:])
    rows = tuple(
        tuple(columns[c][r] for c in range(table.n_cols)) for r in range(table.n_rows)
    )
    return Table(table.header, rows)
