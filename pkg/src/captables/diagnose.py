"""Fault isolation across a hierarchy of tables.

Given an output that failed to appear and a snapshot of the inputs, start at
the top-level table:

* if a transition of the active behavior fires, the table already explains
  the stop and the search ends there;
* if some sub-row promising the output is fully satisfied, the behavior
  should have produced it, so drop into the table that refines the behavior;
* otherwise the closest sub-row (fewest failing cells) names the broken
  condition.

A fully satisfied sub-row with nothing below it means the tables cannot
explain the failure and need revising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .logic import TransitionRef, firing_transitions
from .model import (
    CatDocument,
    CatError,
    Span,
    SubRowRef,
    Valuation,
    behavior_set,
    format_value,
)

__all__ = [
    "CatHierarchy",
    "FailedAtom",
    "Culprit",
    "Diagnosis",
    "diagnose",
    "explain",
    "diagnosis_to_json",
]

BROKEN = "broken-condition"
INCOMPLETE = "table-incomplete"
AT_TOP = "resolved-at-top"


class CatHierarchy:
    """Tables linked by their ``refines`` headers into a forest."""

    def __init__(self, documents: Iterable[CatDocument]):
        self.documents: dict[str, CatDocument] = {}
        for doc in documents:
            if doc.name in self.documents:
                raise CatError("duplicate-document", f"two tables are named {doc.name}")
            self.documents[doc.name] = doc
        self.links: dict[str, tuple[str, str]] = {}
        for doc in self.documents.values():
            if doc.refines is None:
                continue
            parent = self.documents.get(doc.refines.document)
            if parent is None:
                raise CatError("bad-link", f"{doc.name} refines {doc.refines.document}, "
                               "which is not loaded", doc.refines.span)
            if doc.refines.behavior not in behavior_set(parent):
                raise CatError("bad-link", f"{parent.name} has no behavior "
                               f"{doc.refines.behavior}", doc.refines.span)
            self.links[doc.name] = (parent.name, doc.refines.behavior)
        for name in self.documents:
            seen = {name}
            cur = name
            while cur in self.links:
                cur = self.links[cur][0]
                if cur in seen:
                    raise CatError("bad-link", f"refinement cycle through {name}")
                seen.add(cur)
            if self.documents[cur].level != 0:
                raise CatError("bad-link", f"the tree containing {name} has no level 0 root")

    def __getitem__(self, name: str) -> CatDocument:
        try:
            return self.documents[name]
        except KeyError:
            raise CatError("unknown-document", f"no table named {name}") from None

    @property
    def roots(self) -> list[str]:
        return [n for n, d in self.documents.items() if d.refines is None]

    def children(self, doc: str, behavior: str) -> list[CatDocument]:
        return [self.documents[c] for c, link in sorted(self.links.items())
                if link == (doc, behavior)]

    def descendants(self, name: str) -> list[CatDocument]:
        out = [self[name]]
        for doc in out:
            out.extend(self.documents[c] for c, (p, _) in sorted(self.links.items())
                       if p == doc.name)
        return out


@dataclass(frozen=True)
class FailedAtom:
    input: str
    required: str
    actual: str
    span: Span


@dataclass(frozen=True)
class Culprit:
    document: str
    behavior: str
    output: str
    subrow: SubRowRef
    span: Span
    atoms: tuple[FailedAtom, ...]
    note: str = ""


@dataclass(frozen=True)
class Diagnosis:
    verdict: str
    output: str
    path: tuple[tuple[str, str], ...]
    culprit: Optional[Culprit] = None
    transition: Optional[str] = None
    transition_span: Optional[Span] = None
    alternates: tuple[Culprit, ...] = ()


def _failed_atoms(sub, values) -> list[FailedAtom]:
    return [FailedAtom(c.input, c.condition.render(), format_value(values[c.input]), c.span)
            for c in sub.cells if not c.condition.holds(values[c.input])]


def _promises(doc: CatDocument, behavior: str, outputs: set[str]):
    return [(ref, sub) for ref, sub in doc.subrows_of(behavior)
            if ref.output in outputs or doc.alias_target(ref.output) in outputs]


def diagnose(h: CatHierarchy, root: str, violated_output: str, v: Valuation,
             child_behaviors: Optional[Mapping[str, str]] = None) -> Diagnosis:
    """Walk down from ``root`` until the failure is pinned on a condition.

    ``child_behaviors`` optionally names the active behavior inside a child
    table (by table name); otherwise the child's initial behavior is used.
    """
    child_behaviors = dict(child_behaviors or {})
    doc = h[root]
    if doc.level != 0:
        raise CatError("bad-link", f"diagnosis starts at a level 0 table, {root} is level {doc.level}")
    tree = h.descendants(root)
    if not any(violated_output in {r.output for r in d.rows}
               or violated_output in {p for _, p in d.aliases} for d in tree):
        raise CatError("unknown-output", f"no table under {root} promises {violated_output}")

    behavior = v.active_behavior
    if behavior not in behavior_set(doc):
        raise CatError("unknown-behavior", f"{behavior} is not a behavior of {root}")
    outputs = {violated_output}
    path: list[tuple[str, str]] = []
    while True:
        missing = [n for n in doc.input_names if n not in v.values]
        if missing:
            raise CatError("missing-child-values",
                           f"snapshot has no value for {', '.join(missing)} needed by {doc.name}")
        path.append((doc.name, behavior))
        here = Valuation(v.values, behavior)

        if doc.name == root:
            rules = firing_transitions(doc, here)
            if rules:
                first: TransitionRef = rules[0]
                rule = doc.subrow(first.subrow).transitions[first.index]
                return Diagnosis(AT_TOP, violated_output, tuple(path),
                                 transition=f"{behavior} {rule.render()}",
                                 transition_span=rule.span)

        candidates = _promises(doc, behavior, outputs)
        scored = []
        satisfied = False
        for ref, sub in candidates:
            failed = _failed_atoms(sub, v.values)
            if not failed:
                satisfied = True
                break
            scored.append((len(failed), ref, sub, failed))

        if candidates and not satisfied:
            scored.sort(key=lambda s: s[0])  # stable: ties keep document order
            culprits = [Culprit(doc.name, behavior, ref.output, ref, sub.span, tuple(failed),
                                sub.note) for _, ref, sub, failed in scored]
            return Diagnosis(BROKEN, violated_output, tuple(path), culprits[0],
                             alternates=tuple(culprits[1:]))

        kids = h.children(doc.name, behavior)
        if not kids:
            return Diagnosis(INCOMPLETE, violated_output, tuple(path))
        child = kids[0]
        mapped = {r.output for r in child.rows
                  if r.output in outputs or child.alias_target(r.output) in outputs}
        if not mapped:
            return Diagnosis(INCOMPLETE, violated_output, tuple(path))
        behavior = child_behaviors.get(child.name) or child.initial_behavior
        if behavior not in behavior_set(child):
            raise CatError("unknown-behavior", f"{behavior} is not a behavior of {child.name}")
        outputs = mapped
        doc = child


def diagnosis_to_json(d: Diagnosis) -> dict:
    def culprit(c: Culprit) -> dict:
        return {
            "document": c.document,
            "behavior": c.behavior,
            "output": c.output,
            "subrow": str(c.subrow),
            "line": c.span.line,
            "note": c.note,
            "atoms": [{"input": a.input, "required": a.required, "actual": a.actual,
                       "line": a.span.line, "col": a.span.col} for a in c.atoms],
        }

    return {
        "verdict": d.verdict,
        "output": d.output,
        "path": [list(p) for p in d.path],
        "culprit": culprit(d.culprit) if d.culprit else None,
        "transition": d.transition,
        "alternates": [culprit(c) for c in d.alternates],
    }


def explain(d: Diagnosis) -> str:
    lines = [f"verdict: {d.verdict}", f"missing output: {d.output}",
             "path: " + " -> ".join(f"{doc}/{b}" for doc, b in d.path)]
    if d.verdict == AT_TOP:
        lines.append(f"explained by transition at line {d.transition_span.line}: {d.transition}")
        lines.append("the table expects the behavior to change here; check why the robot "
                     "did not follow the transition")
    elif d.verdict == BROKEN:
        c = d.culprit
        lines.append(f"broken condition in {c.document}, sub-row {c.output} : {c.behavior} "
                     f"(line {c.span.line})")
        for a in c.atoms:
            lines.append(f"  line {a.span.line}: {a.input} : {a.required}   (actual {a.actual})")
        if c.note:
            lines.append(f"  note: {c.note}")
        for alt in d.alternates:
            atoms = ", ".join(f"{a.input} : {a.required} (actual {a.actual})" for a in alt.atoms)
            lines.append(f"  also failing: {alt.output}[{alt.subrow.index}] line "
                         f"{alt.span.line}: {atoms}")
    else:
        lines.append("every condition for the output holds, yet the output was not seen; "
                     "no lower-level table explains it")
        lines.append("revise the table: add the missing input or condition, or build a "
                     "lower-level table for this behavior")
    return "\n".join(lines) + "\n"


def explain_json(d: Diagnosis) -> str:
    return json.dumps(diagnosis_to_json(d), indent=2, sort_keys=True)
