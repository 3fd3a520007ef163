"""Command-line interface.

Subcommands: compile, execute, linearize, delinearize, generate, score,
perturb, ensemble.  All outputs are UTF-8 JSON or JSON lines with LF line
endings; errors from a single-query command are reported as an {"error": ...}
object with a stable code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import TabalgError
from .evaluate import DEFAULT_LEXICON, UnitLexicon
from .frontend import parse_sql, to_graph
from .graph import (
    GRID_LEVEL_NAMES,
    LEVELS,
    from_debug_json,
    full_execute,
    get_level,
    partial_execute,
    to_debug_json,
)
from .linearize import SCHEMES, delinearize, get_scheme, linearize
from .pipeline import Condition, RunSpec, ensemble, generate, load_corpus, perturb_corpus, score
from .values import load_table


def _dump(doc, out: str | None) -> None:
    text = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _dump_jsonl(rows, out: str | None) -> None:
    text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _load_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _load_predictions(path: str) -> tuple[list[dict], int]:
    """Prediction files come from models: malformed lines are counted, not fatal."""
    rows: list[dict] = []
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                if not isinstance(doc, dict) or "id" not in doc or "predicted_tokens" not in doc:
                    raise ValueError("missing keys")
            except ValueError:
                malformed += 1
                continue
            rows.append(doc)
    return rows, malformed


def _read_tokens(arg: str) -> str:
    if arg == "-":
        return sys.stdin.read().rstrip("\n")
    return arg


def _lexicon(args) -> UnitLexicon:
    if getattr(args, "unit_lexicon", None):
        return UnitLexicon.load(args.unit_lexicon)
    return DEFAULT_LEXICON


def _build_graph(args):
    table = load_table(args.table, delimiter=args.delimiter)
    return to_graph(parse_sql(args.sql, table.column_names), table)


def cmd_compile(args) -> None:
    _dump(to_debug_json(_build_graph(args)), args.out)


def cmd_execute(args) -> None:
    if args.graph:
        root = from_debug_json(json.loads(Path(args.graph).read_text(encoding="utf-8")))
    elif args.tokens is not None:
        root = delinearize(_read_tokens(args.tokens), get_scheme(args.scheme))
    else:
        if not (args.table and args.sql):
            raise TabalgError("execute needs --graph, --tokens, or --table with --sql")
        root = _build_graph(args)
    _dump({"answer": full_execute(root)}, args.out)


def cmd_linearize(args) -> None:
    root = _build_graph(args)
    reduced = partial_execute(root, get_level(args.level))
    _dump({"tokens": linearize(reduced, get_scheme(args.scheme))}, args.out)


def cmd_delinearize(args) -> None:
    root = delinearize(_read_tokens(args.tokens), get_scheme(args.scheme))
    doc = to_debug_json(root)
    if args.execute:
        doc = {"graph": doc, "answer": full_execute(root)}
    _dump(doc, args.out)


def cmd_generate(args) -> None:
    corpus = load_corpus(args.corpus)
    condition = None
    if not args.grid:
        condition = Condition(get_level(args.level), get_scheme(args.scheme))
    result = generate(
        corpus,
        condition,
        input_source=args.input_source,
        budget=args.budget,
        grid_levels=tuple(args.levels.split(",")) if args.levels else GRID_LEVEL_NAMES,
    )
    _dump_jsonl(result.records, args.out)
    if args.manifest:
        _dump(
            {
                "seed": args.seed,
                "budget": args.budget,
                "input_source": args.input_source,
                "generated": result.generated,
                "skipped": result.skipped,
                "visible_rows": result.visible_rows,
            },
            args.manifest,
        )
    if result.skipped:
        print(
            f"skipped {len(result.skipped)} of {len(corpus)} example(s)",
            file=sys.stderr,
        )


def cmd_score(args) -> None:
    corpus = load_corpus(args.corpus)
    predictions, malformed = _load_predictions(args.predictions)
    condition = Condition(get_level(args.level), get_scheme(args.scheme))
    report = score(
        predictions,
        corpus,
        condition,
        lexicon=_lexicon(args),
        set_equality=args.set_equality,
        malformed_lines=malformed,
    )
    _dump(report, args.out)


def cmd_perturb(args) -> None:
    corpus = load_corpus(args.corpus)
    manifest = perturb_corpus(corpus, args.out_dir, seed=args.seed, budget=args.budget)
    _dump(manifest, args.out)


def cmd_ensemble(args) -> None:
    corpus = load_corpus(args.corpus)
    spec = json.loads(Path(args.runs).read_text(encoding="utf-8"))
    base = Path(args.runs).parent
    runs = [
        RunSpec(
            model_id=entry["model_id"],
            predictions=_load_jsonl(str(base / entry["predictions"])),
            scheme=get_scheme(entry["scheme"]),
            validation_fda=float(entry["validation_fda"]),
        )
        for entry in spec
    ]
    report = ensemble(corpus, runs, lexicon=_lexicon(args), set_equality=args.set_equality)
    _dump(report, args.out)


def _add_table_sql(p: argparse.ArgumentParser) -> None:
    p.add_argument("--table", help="table file (TSV by default)")
    p.add_argument("--delimiter", default="\t", help="table delimiter (default: tab)")
    p.add_argument("--sql", help="query text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabalg",
        description="table algebra toolkit: SQL to graphs, partial execution, "
        "linearization, and denotation metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile SQL over a table into a graph")
    _add_table_sql(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("execute", help="run a graph, query, or sequence to its answer")
    _add_table_sql(p)
    p.add_argument("--graph", help="graph JSON file from 'compile'")
    p.add_argument("--tokens", help="linearized sequence ('-' reads stdin)")
    p.add_argument("--scheme", default="pre", choices=sorted(SCHEMES))
    p.add_argument("--out")
    p.set_defaults(func=cmd_execute)

    p = sub.add_parser("linearize", help="compile, partially execute, and render tokens")
    _add_table_sql(p)
    p.add_argument("--level", default="Full", choices=list(LEVELS))
    p.add_argument("--scheme", default="pre", choices=sorted(SCHEMES))
    p.add_argument("--out")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("delinearize", help="parse a sequence back into a graph")
    p.add_argument("--tokens", required=True, help="linearized sequence ('-' reads stdin)")
    p.add_argument("--scheme", required=True, choices=sorted(SCHEMES))
    p.add_argument("--execute", action="store_true", help="also run the graph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_delinearize)

    p = sub.add_parser("generate", help="emit seq2seq training records for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--level", choices=list(LEVELS))
    p.add_argument("--scheme", choices=sorted(SCHEMES))
    p.add_argument("--grid", action="store_true", help="emit the full level x scheme grid")
    p.add_argument("--levels", help="comma-separated level names for --grid")
    p.add_argument("--input-source", default="question", choices=("sql", "question"))
    p.add_argument("--budget", type=int, default=1024, help="whitespace-token budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", help="write visible-row counts and skip log here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="execute predictions and report denotation accuracy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--level", required=True, choices=list(LEVELS))
    p.add_argument("--scheme", required=True, choices=sorted(SCHEMES))
    p.add_argument("--unit-lexicon")
    p.add_argument("--set-equality", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("perturb", help="write a row-permuted copy of the corpus tables")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--budget", type=int, default=1024)
    p.add_argument("--out")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("ensemble", help="majority-vote combination of prediction runs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--runs", required=True, help="JSON list of {model_id, predictions, scheme, validation_fda}")
    p.add_argument("--unit-lexicon")
    p.add_argument("--set-equality", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ensemble)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "generate" and not args.grid and not (args.level and args.scheme):
        print("generate needs --level and --scheme (or --grid)", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except TabalgError as err:
        sys.stdout.write(json.dumps({"error": err.to_dict()}, ensure_ascii=False) + "\n")
        return 1
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
