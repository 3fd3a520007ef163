"""Batch pipeline: corpus ingestion and the generate / score / perturb /
ensemble stages.

Corpora are JSON lines ({id, question, table, sql?, answer}) with tables as
TSV files referenced by relative path.  Per-example data problems are logged
and counted, never fatal: a batch run only fails on I/O errors.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import MissingId, TabalgError
from .evaluate import (
    DEFAULT_LEXICON,
    Denotation,
    ModelRun,
    UnitLexicon,
    ensemble_vote,
    flexible_da,
    perturb_columns,
    strict_da,
)
from .frontend import parse_sql, to_graph
from .graph import (
    GraphStats,
    LEVELS,
    GRID_LEVEL_NAMES,
    OperatorLevel,
    full_execute,
    graph_stats,
    partial_execute,
)
from .linearize import (
    SCHEMES,
    LinearizationScheme,
    delinearize,
    encode_input,
    linearize,
)
from .values import Table, load_table, save_table

log = logging.getLogger("tabalg")


@dataclass(frozen=True)
class AnnotatedExample:
    id: str
    question: str
    table_path: Path
    table_rel: str
    sql: Optional[str]
    gold_answer: Denotation


@dataclass(frozen=True)
class Condition:
    level: OperatorLevel
    scheme: LinearizationScheme


def load_corpus(corpus_path: Union[str, Path]) -> list[AnnotatedExample]:
    corpus_path = Path(corpus_path)
    root = corpus_path.parent
    examples = []
    seen = set()
    with open(corpus_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if doc["id"] in seen:
                raise TabalgError(f"duplicate example id {doc['id']!r} at line {line_no}")
            seen.add(doc["id"])
            examples.append(
                AnnotatedExample(
                    id=doc["id"],
                    question=doc.get("question", ""),
                    table_path=root / doc["table"],
                    table_rel=doc["table"],
                    sql=doc.get("sql"),
                    gold_answer=Denotation.of(doc.get("answer", [])),
                )
            )
    examples.sort(key=lambda e: e.id)
    return examples


class _TableCache:
    def __init__(self):
        self._cache: dict[Path, Table] = {}

    def get(self, path: Path) -> Table:
        table = self._cache.get(path)
        if table is None:
            table = load_table(path)
            self._cache[path] = table
        return table


@dataclass
class GenerateResult:
    records: list[dict]
    skipped: list[dict]
    visible_rows: dict[str, int]

    @property
    def generated(self) -> int:
        return len(self.records)


def _grid(conditions: Optional[Condition], grid_levels: Sequence[str]) -> list[tuple[OperatorLevel, LinearizationScheme, bool]]:
    if conditions is not None:
        return [(conditions.level, conditions.scheme, False)]
    out = []
    for level_name in grid_levels:
        for scheme in SCHEMES.values():
            out.append((LEVELS[level_name], scheme, True))
    return out


def generate(
    corpus: Sequence[AnnotatedExample],
    condition: Optional[Condition],
    input_source: str = "question",
    budget: int = 1024,
    grid_levels: Sequence[str] = GRID_LEVEL_NAMES,
) -> GenerateResult:
    """Emit {id, input_tokens, target_tokens} records for one condition, or
    for the whole level x scheme grid when ``condition`` is None."""
    if input_source not in ("sql", "question"):
        raise TabalgError(f"input source must be 'sql' or 'question', got {input_source!r}")
    cache = _TableCache()
    records: list[dict] = []
    skipped: list[dict] = []
    visible: dict[str, int] = {}
    cells = _grid(condition, grid_levels)
    for example in corpus:
        if example.sql is None:
            skipped.append({"id": example.id, "reason": "missing sql"})
            continue
        try:
            table = cache.get(example.table_path)
            graph = to_graph(parse_sql(example.sql, table.column_names), table)
            source_text = example.sql if input_source == "sql" else example.question
            encoded = encode_input(source_text, table, budget)
            visible[example.id] = encoded.visible_row_count
            for level, scheme, tag in cells:
                reduced = partial_execute(graph, level)
                target = linearize(reduced, scheme)
                rid = f"{example.id}::{level.name}::{scheme.name}" if tag else example.id
                records.append(
                    {"id": rid, "input_tokens": encoded.tokens, "target_tokens": target}
                )
        except TabalgError as err:
            skipped.append({"id": example.id, "reason": err.code})
            log.warning("skipping %s: %s", example.id, err.message)
            continue
    return GenerateResult(records, skipped, visible)


def _breakdown_add(bucket: dict, key: str, sda: int, fda: int) -> None:
    entry = bucket.setdefault(key, {"count": 0, "sda_sum": 0, "fda_sum": 0})
    entry["count"] += 1
    entry["sda_sum"] += sda
    entry["fda_sum"] += fda


def _breakdown_close(bucket: dict) -> dict:
    out = {}
    for key in sorted(bucket):
        entry = bucket[key]
        out[key] = {
            "count": entry["count"],
            "mean_sda": entry["sda_sum"] / entry["count"],
            "mean_fda": entry["fda_sum"] / entry["count"],
        }
    return out


def _gold_stats(example: AnnotatedExample, cache: _TableCache) -> Optional[GraphStats]:
    if example.sql is None:
        return None
    try:
        table = cache.get(example.table_path)
        return graph_stats(to_graph(parse_sql(example.sql, table.column_names), table))
    except TabalgError:
        return None


def execute_tokens(tokens: str, scheme: LinearizationScheme) -> Denotation:
    """Delinearize a predicted sequence and run it to an answer."""
    return Denotation.of(full_execute(delinearize(tokens, scheme)))


def score(
    predictions: Sequence[dict],
    corpus: Sequence[AnnotatedExample],
    condition: Condition,
    lexicon: UnitLexicon = DEFAULT_LEXICON,
    set_equality: bool = False,
    malformed_lines: int = 0,
) -> dict:
    """Execute predicted sequences and compare denotations against gold.

    ``malformed_lines`` counts prediction rows the caller could not even
    parse; they join the parse-failure tally without being scored.
    """
    by_id = {e.id: e for e in corpus}
    cache = _TableCache()
    per_query = []
    parse_failures = malformed_lines
    by_operator: dict = {}
    by_complexity: dict = {}
    sda_sum = fda_sum = 0
    seen: set[str] = set()
    for row in sorted(predictions, key=lambda r: r["id"]):
        qid = row["id"]
        base_id = qid.split("::", 1)[0]
        example = by_id.get(base_id)
        if example is None:
            raise MissingId(qid)
        if qid in seen:
            raise TabalgError(f"duplicate prediction for {qid}")
        seen.add(qid)
        try:
            predicted = execute_tokens(row["predicted_tokens"], condition.scheme)
            sda = int(strict_da(predicted, example.gold_answer, set_equality))
            fda = int(flexible_da(predicted, example.gold_answer, lexicon, set_equality))
        except TabalgError:
            parse_failures += 1
            sda = fda = 0
        per_query.append({"id": qid, "sda": sda, "fda": fda})
        sda_sum += sda
        fda_sum += fda
        stats = _gold_stats(example, cache)
        if stats is not None:
            for kind in stats.kinds_present:
                _breakdown_add(by_operator, kind.value, sda, fda)
            _breakdown_add(by_complexity, stats.complexity_bin, sda, fda)
    n = len(per_query)
    return {
        "level": condition.level.name,
        "scheme": condition.scheme.name,
        "num_scored": n,
        "malformed_lines": malformed_lines,
        "parse_failures": parse_failures,
        "mean_sda": (sda_sum / n) if n else 0.0,
        "mean_fda": (fda_sum / n) if n else 0.0,
        "per_query": per_query,
        "by_operator": _breakdown_close(by_operator),
        "by_complexity": _breakdown_close(by_complexity),
    }


def _example_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def perturb_corpus(
    corpus: Sequence[AnnotatedExample],
    out_dir: Union[str, Path],
    seed: int,
    budget: int = 1024,
) -> dict:
    """Write a perturbed copy of every table: the rows visible under the
    encoder budget are shuffled per column, everything beyond stays put.
    Tables shared by several questions use the smallest visible count."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = _TableCache()
    visible_by_table: dict[str, int] = {}
    examples_by_table: dict[str, list[str]] = {}
    for example in corpus:
        table = cache.get(example.table_path)
        encoded = encode_input(example.question, table, budget)
        rel = example.table_rel
        examples_by_table.setdefault(rel, []).append(example.id)
        current = visible_by_table.get(rel)
        if current is None or encoded.visible_row_count < current:
            visible_by_table[rel] = encoded.visible_row_count
    manifest_tables = {}
    for example in corpus:
        rel = example.table_rel
        if rel not in manifest_tables:
            table = cache.get(example.table_path)
            visible = visible_by_table[rel]
            perturbed = perturb_columns(table, visible, _example_seed(seed, rel))
            target = out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            save_table(perturbed, target)
            manifest_tables[rel] = {
                "visible_rows": visible,
                "examples": examples_by_table[rel],
            }
    corpus_doc = [
        {
            "id": e.id,
            "question": e.question,
            "table": e.table_rel,
            "sql": e.sql,
            "answer": list(e.gold_answer.values),
        }
        for e in corpus
    ]
    with open(out_dir / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus_doc:
            fh.write(json.dumps(doc, ensure_ascii=False) + "\n")
    manifest = {
        "seed": seed,
        "budget": budget,
        "tables": {k: manifest_tables[k] for k in sorted(manifest_tables)},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n")
    return manifest


@dataclass(frozen=True)
class RunSpec:
    model_id: str
    predictions: list[dict]
    scheme: LinearizationScheme
    validation_fda: float


def _run_denotations(run: RunSpec) -> dict[str, Denotation]:
    out = {}
    for row in run.predictions:
        try:
            out[row["id"]] = execute_tokens(row["predicted_tokens"], run.scheme)
        except TabalgError:
            out[row["id"]] = Denotation.of(())
    return out


def ensemble(
    corpus: Sequence[AnnotatedExample],
    runs: Sequence[RunSpec],
    lexicon: UnitLexicon = DEFAULT_LEXICON,
    set_equality: bool = False,
) -> dict:
    """Majority-vote combination; models are added one at a time in the given
    order and metrics are reported after each addition."""
    if not runs:
        raise TabalgError("ensemble needs at least one run")
    by_id = {e.id: e for e in corpus}
    model_runs = []
    query_ids: Optional[set[str]] = None
    for run in runs:
        denotations = _run_denotations(run)
        ids = set(denotations)
        if query_ids is None:
            query_ids = ids
        elif ids != query_ids:
            diff = sorted(ids.symmetric_difference(query_ids))
            raise TabalgError(f"run {run.model_id} covers different queries: {diff}")
        unknown = sorted(q for q in ids if q.split("::", 1)[0] not in by_id)
        if unknown:
            raise MissingId(unknown[0])
        model_runs.append(ModelRun(run.model_id, denotations, run.validation_fda))
    ordered_ids = sorted(query_ids)
    steps = []
    combined: dict[str, Denotation] = {}
    for upto in range(1, len(model_runs) + 1):
        active = model_runs[:upto]
        sda_sum = fda_sum = 0
        for qid in ordered_ids:
            voted = ensemble_vote(active, qid)
            combined[qid] = voted
            gold = by_id[qid.split("::", 1)[0]].gold_answer
            sda_sum += int(strict_da(voted, gold, set_equality))
            fda_sum += int(flexible_da(voted, gold, lexicon, set_equality))
        n = len(ordered_ids)
        steps.append(
            {
                "models": [r.model_id for r in active],
                "mean_sda": (sda_sum / n) if n else 0.0,
                "mean_fda": (fda_sum / n) if n else 0.0,
            }
        )
    predictions = [
        {"id": qid, "answer": list(combined[qid].values)} for qid in ordered_ids
    ]
    return {"steps": steps, "predictions": predictions}
