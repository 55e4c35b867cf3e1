"""Offline monitoring of robot logs against a table, and baseline tests.

A trace is a list of timestamped records (input snapshot, observed outputs,
optionally the behavior the robot reported).  Each record is checked against
what the top-level table promises for the active behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import IO, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .analysis import discretization
from .diagnose import CatHierarchy, Diagnosis, diagnose, diagnosis_to_json
from .logic import evaluate, firing_transitions
from .model import (
    AXES,
    CatDocument,
    CatError,
    SubRowRef,
    Valuation,
    Value,
    Vec3,
    behavior_set,
    coerce_value,
    format_value,
)

__all__ = [
    "TraceRecord",
    "ViolationEvent",
    "BaselineTest",
    "replay",
    "derive_baseline_tests",
    "read_trace",
    "write_trace",
    "record_to_json",
    "record_from_json",
    "value_to_json",
    "number_to_json",
]

MISSING = "missing-output"
UNEXPECTED = "unexpected-output"
UNDEFINED = "undefined-response"
ILLEGAL = "illegal-transition"
VIOLATION_KINDS = (MISSING, UNEXPECTED, UNDEFINED, ILLEGAL)


@dataclass(frozen=True)
class TraceRecord:
    t: Union[int, Decimal]
    inputs: Mapping[str, object]
    observed_outputs: frozenset = frozenset()
    observed_behavior: Optional[str] = None


@dataclass(frozen=True)
class ViolationEvent:
    t: Union[int, Decimal]
    kind: str
    detail: str
    behavior: str
    output: Optional[str] = None
    diagnosis: Optional[Diagnosis] = None
    diagnosis_error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "t": number_to_json(self.t),
            "kind": self.kind,
            "behavior": self.behavior,
            "output": self.output,
            "detail": self.detail,
            "diagnosis": diagnosis_to_json(self.diagnosis) if self.diagnosis else None,
            "diagnosis_error": self.diagnosis_error,
        }

    def format(self) -> str:
        line = f"t={format_value(Decimal(self.t))} {self.kind} [{self.behavior}]: {self.detail}"
        if self.diagnosis is not None:
            d = self.diagnosis
            line += f" -> {d.verdict}"
            if d.culprit is not None:
                atoms = ", ".join(f"{a.input} : {a.required}" for a in d.culprit.atoms)
                line += f" ({d.culprit.document}: {atoms})"
        elif self.diagnosis_error:
            line += f" -> diagnosis unavailable: {self.diagnosis_error}"
        return line


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def _snapshot(h: CatHierarchy, root: CatDocument, rec: TraceRecord) -> dict[str, Value]:
    """Checked values for the root's inputs plus any extra inputs known to the hierarchy."""
    decls = {d.name: d for doc in h.descendants(root.name) for d in doc.inputs}
    decls.update({d.name: d for d in root.inputs})
    missing = [n for n in root.input_names if n not in rec.inputs]
    if missing:
        raise CatError("schema-mismatch", f"record at t={rec.t} has no value for "
                       + ", ".join(missing))
    values = {}
    for name, raw in rec.inputs.items():
        decl = decls.get(name)
        if decl is None:
            raise CatError("schema-mismatch", f"record at t={rec.t} has undeclared input {name}")
        value = coerce_value(decl, raw)
        why = decl.check_value(value)
        if why:
            raise CatError("schema-mismatch", f"record at t={rec.t}: {name}: {why}")
        values[name] = value
    return values


def replay(h: CatHierarchy, root: str, trace: Sequence[TraceRecord]) -> list[ViolationEvent]:
    """Check each record against ``root`` and every behavior change against its rules.

    Records without a reported behavior are tracked by stepping the table.
    Missing outputs come with a diagnosis over the whole hierarchy.
    """
    doc = h[root]
    known = behavior_set(doc)
    events: list[ViolationEvent] = []
    prev_t = None
    prev_valuation: Optional[Valuation] = None
    prev_next: Optional[str] = None
    for rec in trace:
        if prev_t is not None and rec.t < prev_t:
            raise CatError("nonmonotone-time", f"t={rec.t} follows t={prev_t}")
        prev_t = rec.t
        values = _snapshot(h, doc, rec)
        if rec.observed_behavior is not None:
            behavior = rec.observed_behavior
        elif prev_next is not None:
            behavior = prev_next
        else:
            behavior = doc.initial_behavior
        if behavior not in known:
            raise CatError("schema-mismatch",
                           f"record at t={rec.t} reports unknown behavior {behavior}")
        v = Valuation(values, behavior)

        if prev_valuation is not None and behavior != prev_valuation.active_behavior:
            licensed = any(r.target == behavior for r in firing_transitions(doc, prev_valuation))
            if not licensed:
                events.append(ViolationEvent(
                    rec.t, ILLEGAL,
                    f"{prev_valuation.active_behavior} -> {behavior} with no firing transition",
                    behavior))

        outcome = evaluate(doc, v)
        if outcome.undefined_response:
            events.append(ViolationEvent(rec.t, UNDEFINED,
                                         "no output promised and no transition fires", behavior))
        observed = set(rec.observed_outputs)
        for out in sorted(outcome.expected_outputs - observed):
            diag, err = None, None
            try:
                diag = diagnose(h, root, out, v)
            except CatError as e:
                err = e.code
            events.append(ViolationEvent(rec.t, MISSING, f"{out} expected but not observed",
                                         behavior, out, diag, err))
        for out in sorted(observed - outcome.expected_outputs):
            events.append(ViolationEvent(rec.t, UNEXPECTED,
                                         f"{out} observed but no sub-row of {behavior} fires",
                                         behavior, out))
        prev_valuation = v
        prev_next = outcome.next_behavior
    return events


# ---------------------------------------------------------------------------
# Baseline tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineTest:
    behavior: str
    subrow: SubRowRef
    valuation: Valuation
    expected_outputs: frozenset
    forbidden_outputs: frozenset

    def to_json(self) -> dict:
        return {
            "behavior": self.behavior,
            "subrow": str(self.subrow),
            "inputs": {k: value_to_json(v) for k, v in self.valuation.values.items()},
            "expected_outputs": sorted(self.expected_outputs),
            "forbidden_outputs": sorted(self.forbidden_outputs),
        }

    def format(self) -> str:
        inputs = ", ".join(f"{k}={format_value(v)}" for k, v in self.valuation.values.items())
        return (f"{self.behavior} [{self.subrow}]: given {inputs} expect "
                f"{{{', '.join(sorted(self.expected_outputs))}}} forbid "
                f"{{{', '.join(sorted(self.forbidden_outputs))}}}")


def derive_baseline_tests(doc: CatDocument) -> list[BaselineTest]:
    """One test per sub-row: the first probe valuation that fires it.

    The grid is ordered lexicographically by column, and a sub-row fires
    exactly when each of its cells holds, so the first firing valuation takes
    the smallest satisfying probe for every constrained input and the first
    probe for every blank one.
    """
    probes = discretization(doc)
    outputs_of: dict[str, set[str]] = {}
    for ref, sub in doc.subrows():
        outputs_of.setdefault(sub.behavior, set()).add(ref.output)
    tests = []
    for ref, sub in doc.subrows():
        cells = sub.cell_map
        values = {}
        for name in doc.input_names:
            cond = cells.get(name)
            pick = next((p for p in probes[name] if cond is None or cond.holds(p)), None)
            if pick is None:
                raise CatError("unsatisfiable-subrow",
                               f"no probe value satisfies {name} : {cond.render()} in "
                               f"{ref}", sub.cell(name).span)
            values[name] = pick
        v = Valuation(values, sub.behavior)
        expected = evaluate(doc, v).expected_outputs
        forbidden = set().union(*(o for b, o in outputs_of.items() if b != sub.behavior))
        forbidden -= outputs_of[sub.behavior]
        tests.append(BaselineTest(sub.behavior, ref, v, expected, frozenset(forbidden)))
    return tests


# ---------------------------------------------------------------------------
# JSON Lines
# ---------------------------------------------------------------------------


def number_to_json(d) -> Union[int, float]:
    if isinstance(d, Decimal):
        return int(d) if d == d.to_integral_value() else float(d)
    return d


def value_to_json(v: object) -> object:
    if isinstance(v, bool) or isinstance(v, str):
        return v
    if isinstance(v, Vec3):
        return {a: number_to_json(c) for a, c in zip(AXES, v)}
    return number_to_json(v)


def record_to_json(rec: TraceRecord) -> dict:
    out = {
        "t": number_to_json(rec.t),
        "inputs": {k: value_to_json(v) for k, v in rec.inputs.items()},
        "outputs": sorted(rec.observed_outputs),
    }
    if rec.observed_behavior is not None:
        out["behavior"] = rec.observed_behavior
    return out


def record_from_json(obj: Mapping) -> TraceRecord:
    try:
        t = obj["t"]
        inputs = dict(obj["inputs"])
        outputs = frozenset(obj.get("outputs", ()))
    except (KeyError, TypeError) as e:
        raise CatError("schema-mismatch", f"bad trace record: {e}") from None
    if isinstance(t, float):
        t = Decimal(repr(t))
    return TraceRecord(t, inputs, outputs, obj.get("behavior"))


def read_trace(stream: Union[IO[str], Iterable[str]]) -> list[TraceRecord]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line, parse_float=Decimal)
        except json.JSONDecodeError as e:
            raise CatError("schema-mismatch", f"trace line {lineno}: {e.msg}") from None
        out.append(record_from_json(obj))
    return out


def dumps_record(rec: TraceRecord) -> str:
    return json.dumps(record_to_json(rec), sort_keys=True, separators=(",", ":"))


def write_trace(trace: Iterable[TraceRecord], stream: IO[str]) -> None:
    for rec in trace:
        stream.write(dumps_record(rec) + "\n")


def iter_json_events(events: Iterable[ViolationEvent]) -> Iterator[str]:
    for e in events:
        yield json.dumps(e.to_json(), sort_keys=True)
