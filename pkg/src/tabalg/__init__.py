"""Tabular algebra toolkit.

Compiles a restricted SQL dialect into computational graphs over tables,
partially executes them under configurable operator cut-offs, converts graphs
to and from token sequences in six schemes, and evaluates predicted answers
with strict/flexible denotation accuracy.
"""

from .errors import TabalgError
from .values import BoolColumn, Cell, GroupTable, Table, load_table, parse_cell, render_cell
from .ops import Operator, OpKind, to_answer
from .graph import (
    FULL,
    GraphBuilder,
    GraphNode,
    LEVEL_CHAIN,
    LEVELS,
    OperatorLevel,
    full_execute,
    get_level,
    graph_stats,
    partial_execute,
)
from .frontend import compile_sql, parse_sql, synthesize_id_column, to_graph

__all__ = [
    "TabalgError",
    "BoolColumn",
    "Cell",
    "GroupTable",
    "Table",
    "load_table",
    "parse_cell",
    "render_cell",
    "Operator",
    "OpKind",
    "to_answer",
    "FULL",
    "GraphBuilder",
    "GraphNode",
    "LEVEL_CHAIN",
    "LEVELS",
    "OperatorLevel",
    "full_execute",
    "get_level",
    "graph_stats",
    "partial_execute",
    "compile_sql",
    "parse_sql",
    "synthesize_id_column",
    "to_graph",
]
