"""Row semantics: sub-rows as implications, and evaluation of a table.

A sub-row of behavior B for output O reads as

    cell_1 AND cell_2 AND ... AND cell_n  ==>  O     (while B is active)

and several sub-rows for one output are alternatives.  Only rows of the
active behavior are consulted; blank cells impose nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    CatDocument,
    CatError,
    Condition,
    Span,
    SubRowRef,
    TransitionRule,
    Valuation,
    behavior_set,
)

__all__ = [
    "Atom",
    "Implication",
    "TransitionRef",
    "EvalOutcome",
    "compile",
    "evaluate",
    "firing_transitions",
    "trace_step",
]


@dataclass(frozen=True)
class Atom:
    input: str
    condition: Condition

    def holds(self, values) -> bool:
        return self.condition.holds(values[self.input])

    def render(self) -> str:
        return f"{self.input} : {self.condition.render()}"


@dataclass(frozen=True)
class Implication:
    behavior: str
    antecedent: tuple[Atom, ...]
    consequent: str
    origin: SubRowRef
    span: Span

    def holds(self, v: Valuation) -> bool:
        """True when the antecedent is satisfied (so the consequent is promised)."""
        return v.active_behavior == self.behavior and all(a.holds(v.values) for a in self.antecedent)

    def render(self) -> str:
        lhs = " AND ".join(f"({a.render()})" for a in self.antecedent)
        return f"{self.behavior}: {lhs} => {self.consequent}"


def compile(doc: CatDocument) -> list[Implication]:  # noqa: A001
    """One implication per sub-row, in document order; atoms in column order."""
    column = {name: i for i, name in enumerate(doc.input_names)}
    out = []
    for ref, sub in doc.subrows():
        cells = sorted(sub.cells, key=lambda c: column[c.input])
        out.append(Implication(sub.behavior,
                               tuple(Atom(c.input, c.condition) for c in cells),
                               ref.output, ref, sub.span))
    return out


@dataclass(frozen=True)
class TransitionRef:
    subrow: SubRowRef
    index: int
    target: str
    span: Span

    def __str__(self) -> str:
        return f"{self.subrow}->{self.target}"


@dataclass(frozen=True)
class EvalOutcome:
    expected_outputs: frozenset[str]
    fired_subrows: tuple[SubRowRef, ...]
    next_behavior: str
    undefined_response: bool
    fired_transition: Optional[TransitionRef] = None
    nondeterministic_transition: Optional[tuple[TransitionRef, ...]] = None


def _check_values(doc: CatDocument, v: Valuation) -> None:
    missing = [n for n in doc.input_names if n not in v.values]
    if missing:
        raise CatError("schema-mismatch", "valuation has no value for " + ", ".join(missing))


def firing_transitions(doc: CatDocument, v: Valuation) -> list[TransitionRef]:
    """Rules of the active behavior whose guards hold, in priority order."""
    out = []
    for ref, sub in doc.subrows_of(v.active_behavior):
        for j, rule in enumerate(sub.transitions):
            if rule.guard.holds(v.values):
                out.append(TransitionRef(ref, j, rule.target, rule.span))
    return out


def evaluate(doc: CatDocument, v: Valuation) -> EvalOutcome:
    if v.active_behavior not in behavior_set(doc):
        raise CatError("unknown-behavior",
                       f"{v.active_behavior} is not a behavior of {doc.name}")
    _check_values(doc, v)
    fired = []
    outputs = set()
    for ref, sub in doc.subrows_of(v.active_behavior):
        if all(c.condition.holds(v.values[c.input]) for c in sub.cells):
            fired.append(ref)
            outputs.add(ref.output)
    rules = firing_transitions(doc, v)
    first = rules[0] if rules else None
    nxt = first.target if first else v.active_behavior
    nondet = None
    if len({r.target for r in rules}) >= 2:
        nondet = tuple(rules)
    return EvalOutcome(
        expected_outputs=frozenset(outputs),
        fired_subrows=tuple(fired),
        next_behavior=nxt,
        undefined_response=not outputs and nxt == v.active_behavior,
        fired_transition=first,
        nondeterministic_transition=nondet,
    )


def trace_step(doc: CatDocument, v: Valuation) -> Valuation:
    """Advance the active behavior by one step; input values are kept."""
    return v.with_behavior(evaluate(doc, v).next_behavior)


def rule(doc: CatDocument, ref: TransitionRef) -> TransitionRule:
    return doc.subrow(ref.subrow).transitions[ref.index]
