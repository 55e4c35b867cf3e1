"""Capability analysis tables: a text format for robot behavior tables, plus
evaluation, static analysis, fault isolation and log monitoring."""

from .analysis import (
    CoverageReport,
    RefinementReport,
    add_input_column,
    check_refinement,
    coverage,
    discretization,
    validate,
)
from .diagnose import CatHierarchy, Diagnosis, diagnose, explain
from .logic import EvalOutcome, Implication, compile, evaluate, trace_step
from .model import (
    CatDocument,
    CatError,
    Diagnostic,
    InputDecl,
    Span,
    TableStats,
    Valuation,
    Vec3,
    make_valuation,
    table_stats,
)
from .monitor import BaselineTest, TraceRecord, ViolationEvent, derive_baseline_tests, replay
from .parser import ParseResult, parse, parse_file, render

__version__ = "0.1.0"

__all__ = [
    "BaselineTest",
    "CatDocument",
    "CatError",
    "CatHierarchy",
    "CoverageReport",
    "Diagnosis",
    "Diagnostic",
    "EvalOutcome",
    "Implication",
    "InputDecl",
    "ParseResult",
    "RefinementReport",
    "Span",
    "TableStats",
    "TraceRecord",
    "Valuation",
    "Vec3",
    "ViolationEvent",
    "add_input_column",
    "check_refinement",
    "compile",
    "coverage",
    "derive_baseline_tests",
    "diagnose",
    "discretization",
    "evaluate",
    "explain",
    "make_valuation",
    "parse",
    "parse_file",
    "render",
    "replay",
    "table_stats",
    "trace_step",
    "validate",
]
