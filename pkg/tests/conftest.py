import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))
sys.path.insert(0, str(ROOT / "src"))  # allow running from a bare checkout

from tabalg.frontend import compile_sql
from tabalg.values import Cell, Table

MINI_CORPUS = ROOT / "data" / "mini_corpus" / "corpus.jsonl"

WORKED_SQL = (
    "SELECT East Region FROM w WHERE East Region in ('fauldhouse', 'newtongrange') "
    "GROUP BY East Region ORDER BY COUNT ( id ) DESC LIMIT 1"
)

WORKED_TEAMS = [
    "newtongrange",
    "fauldhouse",
    "musselburgh",
    "whitburn",
    "dalkeith thistle",
    "armadale",
    "fauldhouse",
]


@pytest.fixture(scope="session")
def worked_table() -> Table:
    return Table.build([[Cell.text(t)] for t in WORKED_TEAMS], header=["East Region"])


@pytest.fixture(scope="session")
def worked_graph(worked_table):
    return compile_sql(WORKED_SQL, worked_table)


@pytest.fixture(scope="session")
def mini_corpus_path() -> Path:
    assert MINI_CORPUS.exists(), "bundled mini corpus missing"
    return MINI_CORPUS
