"""Command-line entry point: ``captables <subcommand> ...``.

Exit status is 0 when nothing was found, 1 when the command reports
error-level diagnostics, uncovered valuations, refinement violations,
a table fault or monitoring violations, and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .analysis import DEFAULT_MAX_CASES, add_input_column, check_refinement, coverage, validate
from .diagnose import AT_TOP, CatHierarchy, diagnose, diagnosis_to_json, explain
from .logic import evaluate
from .model import (
    CatDocument,
    CatError,
    Diagnostic,
    Valuation,
    coerce_value,
    format_value,
    make_valuation,
    table_stats,
)
from .monitor import derive_baseline_tests, read_trace, replay, value_to_json
from .parser import parse_file, parse_input_decl, render

SCHEMA_VERSION = 1

OK, FINDINGS, USAGE = 0, 1, 2


class _Failure(Exception):
    """Abort with exit status 2 after the diagnostics have been reported."""

    def __init__(self, message: str, diagnostics: Sequence[Diagnostic] = ()):
        super().__init__(message)
        self.message = message
        self.diagnostics = tuple(diagnostics)


class _Out:
    def __init__(self, fmt: str, stream: TextIO):
        self.fmt = fmt
        self.stream = stream
        mode = os.environ.get("CAT_COLOR", "auto")
        self.color = mode != "never" and fmt == "text" and getattr(stream, "isatty", lambda: False)()

    def line(self, text: str = "") -> None:
        self.stream.write(text + "\n")

    def json(self, command: str, payload: dict) -> None:
        body = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
        self.stream.write(json.dumps(body, indent=2, sort_keys=True) + "\n")

    def diag(self, d: Diagnostic) -> None:
        text = d.format()
        if self.color:
            code = {"error": "31", "warning": "33"}.get(d.severity, "36")
            text = text.replace(f"{d.severity}[", f"\x1b[{code}m{d.severity}\x1b[0m[", 1)
        self.line(text)


# -- loading ----------------------------------------------------------------


def _load(paths: Sequence[str]) -> list[CatDocument]:
    docs, problems = [], []
    for p in paths:
        try:
            result = parse_file(p)
        except OSError as e:
            raise _Failure(f"cannot read {p}: {e.strerror}") from None
        if result.ok:
            docs.append(result.document)
        else:
            problems.extend(result.diagnostics)
    if problems:
        raise _Failure("parse failed", problems)
    return docs


def _assignments(pairs: Sequence[str]) -> dict[str, str]:
    raw = {}
    for item in pairs or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise _Failure(f"--set expects NAME=VALUE, got {item!r}")
        raw[name.strip()] = value.strip()
    return raw


def _values(docs: Sequence[CatDocument], raw: dict[str, str]) -> dict:
    decls = {}
    for doc in docs:
        for d in doc.inputs:
            decls.setdefault(d.name, d)
    values = {}
    for name, text in raw.items():
        decl = decls.get(name)
        if decl is None:
            raise CatError("schema-mismatch", f"undeclared input {name}")
        v = coerce_value(decl, text)
        why = decl.check_value(v)
        if why:
            raise CatError("domain-violation", f"{name}: {why}")
        values[name] = v
    return values


def _root(h: CatHierarchy, wanted: Optional[str]) -> str:
    if wanted:
        h[wanted]
        return wanted
    roots = h.roots
    if len(roots) != 1:
        raise _Failure("several level 0 tables given; pick one with --root")
    return roots[0]


def _values_json(values) -> dict:
    return {k: value_to_json(v) for k, v in values.items()}


# -- subcommands --------------------------------------------------------------


def cmd_check(args, out: _Out) -> int:
    docs = _load(args.files)
    findings = []
    summaries = []
    for path, doc in zip(args.files, docs):
        diags = validate(doc, filename=path)
        cov = coverage(doc, args.max_cases)
        findings.extend(diags)
        summaries.append((path, doc, diags, cov))
    status = FINDINGS if any(d.is_error for d in findings) else OK
    if out.fmt == "json":
        out.json("check", {
            "files": [{
                "file": path,
                "document": doc.name,
                "diagnostics": [d.to_json() for d in diags],
                "coverage": {"enumerated": cov.enumerated_count, "uncovered": len(cov.uncovered),
                             "truncated": list(cov.truncated)},
            } for path, doc, diags, cov in summaries],
            "ok": status == OK,
        })
        return status
    for path, doc, diags, cov in summaries:
        for d in diags:
            out.diag(d)
        errors = sum(d.is_error for d in diags)
        warnings = sum(d.severity == "warning" for d in diags)
        line = (f"{path}: {doc.name}: {errors} error(s), {warnings} warning(s); coverage "
                f"{cov.enumerated_count} valuations, {len(cov.uncovered)} undefined")
        if cov.truncated:
            line += f" (truncated: {', '.join(cov.truncated)})"
        out.line(line)
    return status


def cmd_eval(args, out: _Out) -> int:
    (doc,) = _load([args.file])
    v = make_valuation(doc.inputs, _assignments(args.set), args.behavior)
    r = evaluate(doc, v)
    status = FINDINGS if r.undefined_response else OK
    if out.fmt == "json":
        out.json("eval", {
            "document": doc.name,
            "behavior": args.behavior,
            "inputs": _values_json(v.values),
            "expected_outputs": sorted(r.expected_outputs),
            "fired_subrows": [str(s) for s in r.fired_subrows],
            "next_behavior": r.next_behavior,
            "fired_transition": str(r.fired_transition) if r.fired_transition else None,
            "nondeterministic_transition": [str(t) for t in r.nondeterministic_transition or ()],
            "undefined_response": r.undefined_response,
        })
        return status
    out.line(f"behavior: {args.behavior}")
    out.line(f"expected outputs: {', '.join(sorted(r.expected_outputs)) or '(none)'}")
    out.line(f"fired sub-rows: {', '.join(str(s) for s in r.fired_subrows) or '(none)'}")
    out.line(f"next behavior: {r.next_behavior}")
    if r.nondeterministic_transition:
        out.line("several transitions fire: "
                 + ", ".join(str(t) for t in r.nondeterministic_transition))
    if r.undefined_response:
        out.line("undefined response: no output promised and no transition fires")
    return status


def cmd_coverage(args, out: _Out) -> int:
    (doc,) = _load([args.file])
    cov = coverage(doc, args.max_cases)
    status = FINDINGS if cov.uncovered else OK
    if out.fmt == "json":
        out.json("coverage", {
            "document": doc.name,
            "enumerated": cov.enumerated_count,
            "truncated": list(cov.truncated),
            "discretization": {k: [value_to_json(x) for x in vs]
                               for k, vs in cov.discretization.items()},
            "uncovered": [{"behavior": w.active_behavior, "inputs": _values_json(w.values)}
                          for w in cov.uncovered],
        })
        return status
    out.line(f"{doc.name}: {cov.enumerated_count} valuations enumerated, "
             f"{len(cov.uncovered)} undefined")
    if cov.truncated:
        out.line(f"grid capped at {args.max_cases} for: {', '.join(cov.truncated)}")
    shown = cov.uncovered[: args.show]
    for w in shown:
        vals = ", ".join(f"{k}={format_value(x)}" for k, x in w.values.items())
        out.line(f"  {w.active_behavior}: {vals}")
    if len(cov.uncovered) > len(shown):
        out.line(f"  ... {len(cov.uncovered) - len(shown)} more (use --show)")
    return status


def cmd_refine(args, out: _Out) -> int:
    parent, child = _load([args.parent, args.child])
    rep = check_refinement(parent, child)
    status = OK if rep.accepted else FINDINGS
    if out.fmt == "json":
        out.json("refine", {
            "parent": parent.name,
            "child": child.name,
            "accepted": rep.accepted,
            "inherited_inputs": list(rep.inherited_inputs),
            "violations": [d.to_json() for d in rep.violations],
        })
        return status
    for d in rep.violations:
        out.diag(d)
    out.line(f"{child.name} refines {parent.name}: "
             f"{'accepted' if rep.accepted else 'rejected'}; inherited inputs: "
             f"{', '.join(rep.inherited_inputs) or '(none)'}")
    return status


def cmd_diagnose(args, out: _Out) -> int:
    h = CatHierarchy(_load(args.files))
    root = _root(h, args.root)
    values = _values(list(h.documents.values()), _assignments(args.set))
    child = dict(_assignments(args.child))
    d = diagnose(h, root, args.violated, Valuation(values, args.behavior), child)
    status = OK if d.verdict == AT_TOP else FINDINGS
    if out.fmt == "json":
        out.json("diagnose", diagnosis_to_json(d))
    else:
        out.stream.write(explain(d))
    return status


def cmd_monitor(args, out: _Out) -> int:
    h = CatHierarchy(_load(args.files))
    root = _root(h, args.root)
    try:
        with open(args.log, encoding="utf-8") as f:
            trace = read_trace(f)
    except OSError as e:
        raise _Failure(f"cannot read {args.log}: {e.strerror}") from None
    events = replay(h, root, trace)
    status = FINDINGS if events else OK
    if out.fmt == "json":
        out.json("monitor", {"root": root, "records": len(trace),
                             "violations": [e.to_json() for e in events]})
        return status
    for e in events:
        out.line(e.format())
    out.line(f"{len(trace)} records, {len(events)} violation(s)")
    return status


def cmd_tests(args, out: _Out) -> int:
    (doc,) = _load([args.file])
    tests = derive_baseline_tests(doc)
    if out.fmt == "json":
        out.json("tests", {"document": doc.name, "tests": [t.to_json() for t in tests]})
        return OK
    for t in tests:
        out.line(t.format())
    return OK


def cmd_add_input(args, out: _Out) -> int:
    (doc,) = _load([args.file])
    decl = parse_input_decl(args.name, args.type)
    new = add_input_column(doc, decl)
    text = render(new)
    target = Path(args.output or args.file)
    target.write_text(text, encoding="utf-8")
    if out.fmt == "json":
        out.json("add-input", {"file": str(target), "document": new.name, "input": decl.name,
                               "kind": decl.kind.render()})
    else:
        out.line(f"{target}: added input {decl.name} : {decl.kind.render()}")
    return OK


def cmd_stats(args, out: _Out) -> int:
    docs = _load(args.files)
    per = [(doc.name, table_stats([doc])) for doc in docs]
    total = table_stats(docs)
    if out.fmt == "json":
        out.json("stats", {"documents": {n: s.to_json() for n, s in per},
                           "total": total.to_json()})
        return OK
    out.line(f"{'document':<20} {'behaviors':>9} {'outputs':>7} {'inputs':>6} {'pairs':>5}")
    for name, s in per + [("total", total)]:
        out.line(f"{name:<20} {s.behaviors:>9} {s.outputs:>7} {s.inputs:>6} {s.pairs:>5}")
    return OK


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text",
                        help="output format (default: text)")

    p = argparse.ArgumentParser(prog="captables",
                                description="Parse, analyze and monitor capability analysis tables.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("check", cmd_check, "parse and validate tables, with a coverage summary")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--max-cases", type=int, default=DEFAULT_MAX_CASES)

    sp = add("eval", cmd_eval, "evaluate one table for one snapshot")
    sp.add_argument("file")
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--set", action="append", default=[], metavar="NAME=VALUE")

    sp = add("coverage", cmd_coverage, "list snapshots with an undefined response")
    sp.add_argument("file")
    sp.add_argument("--max-cases", type=int, default=DEFAULT_MAX_CASES)
    sp.add_argument("--show", type=int, default=20, help="witnesses listed in text mode")

    sp = add("refine", cmd_refine, "check that a child table refines its parent")
    sp.add_argument("parent")
    sp.add_argument("child")

    sp = add("diagnose", cmd_diagnose, "find the condition behind a missing output")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--violated", required=True, metavar="OUTPUT")
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--set", action="append", default=[], metavar="NAME=VALUE")
    sp.add_argument("--child", action="append", default=[], metavar="TABLE=BEHAVIOR",
                    help="active behavior inside a lower-level table")
    sp.add_argument("--root", help="level 0 table to start from")

    sp = add("monitor", cmd_monitor, "replay a JSON Lines log against a table hierarchy")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--log", required=True)
    sp.add_argument("--root", help="level 0 table to check against")

    sp = add("tests", cmd_tests, "derive baseline tests, one per sub-row")
    sp.add_argument("file")

    sp = add("add-input", cmd_add_input, "append an input column and rewrite the table")
    sp.add_argument("file")
    sp.add_argument("--name", required=True)
    sp.add_argument("--type", required=True, help='kind text, e.g. "bool" or '
                    '"number unit cm domain [0, 50]"')
    sp.add_argument("--output", help="write here instead of rewriting FILE")

    sp = add("stats", cmd_stats, "count behaviors, outputs, inputs and cells")
    sp.add_argument("files", nargs="+")
    return p


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
        stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE
    out = _Out(args.format, stdout)
    try:
        return args.func(args, out)
    except _Failure as e:
        _report(out, stderr, args.command, "parse-error" if e.diagnostics else "usage",
                e.message, e.diagnostics)
    except CatError as e:
        _report(out, stderr, args.command, e.code, e.message, ())
    return USAGE


def _report(out: _Out, stderr: TextIO, command: str, code: str, message: str,
            diagnostics: Sequence[Diagnostic]) -> None:
    if out.fmt == "json":
        out.json(command, {"error": {"code": code, "message": message},
                        "diagnostics": [d.to_json() for d in diagnostics]})
    else:
        for d in diagnostics:
            out.diag(d)
    stderr.write(f"captables: {code}: {message}\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
