"""Static checks over tables: validation, undefined-response coverage,
refinement between abstraction levels, and column edits.

Coverage works on a boundary-value grid.  Every condition in this format
compares an input against constants, so the truth of every cell and guard is
constant between consecutive constants.  Probing each constant, one unit in
its last written decimal place on either side, and the domain endpoints hits
every region the table distinguishes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Optional, Sequence

from .logic import evaluate
from .model import (
    AXES,
    EXIT,
    AnyClause,
    AxisCompare,
    BoolKind,
    CatDocument,
    CatError,
    Compare,
    Condition,
    Diagnostic,
    EnumKind,
    GuardAtom,
    GuardOr,
    InputDecl,
    Membership,
    NumberKind,
    Range,
    SubRow,
    Valuation,
    Value,
    Vec3,
    behavior_set,
    dangling_transitions,
    error,
    info,
    referenced_inputs,
    structural_problems,
    ulp,
    warning,
)

__all__ = [
    "CoverageReport",
    "RefinementReport",
    "validate",
    "coverage",
    "check_refinement",
    "add_input_column",
    "discretization",
    "probe_grid",
    "relevant_inputs",
    "condition_satisfiable",
]

DEFAULT_MAX_CASES = 200_000


# ---------------------------------------------------------------------------
# Interval reasoning
# ---------------------------------------------------------------------------


@dataclass
class _Interval:
    """A set of reals: one interval minus finitely many points."""

    lo: Optional[Decimal] = None
    lo_closed: bool = True
    hi: Optional[Decimal] = None
    hi_closed: bool = True
    excluded: set = field(default_factory=set)

    def cut(self, op: str, c: Decimal) -> None:
        if op in (">", ">="):
            closed = op == ">="
            if self.lo is None or c > self.lo or (c == self.lo and not closed):
                self.lo, self.lo_closed = c, closed
        elif op in ("<", "<="):
            closed = op == "<="
            if self.hi is None or c < self.hi or (c == self.hi and not closed):
                self.hi, self.hi_closed = c, closed
        elif op == "==":
            self.cut(">=", c)
            self.cut("<=", c)
        else:
            self.excluded.add(c)

    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed) or self.lo in self.excluded
        return False


def _clauses_satisfiable(kind, clauses: Iterable) -> bool:
    clauses = [c for c in clauses if not isinstance(c, AnyClause)]
    if isinstance(kind, BoolKind):
        allowed = {True, False}
        for c in clauses:
            allowed &= {c.literal} if c.op == "==" else {not c.literal}
        return bool(allowed)
    if isinstance(kind, EnumKind):
        allowed = set(kind.members)
        for c in clauses:
            if isinstance(c, Membership):
                allowed &= set(c.members)
            elif c.op == "==":
                allowed &= {c.literal}
            else:
                allowed -= {c.literal}
        return bool(allowed)
    if isinstance(kind, NumberKind):
        iv = _Interval()
        if kind.bounded:
            iv.cut(">=", kind.lo)
            iv.cut("<=", kind.hi)
        for c in clauses:
            if isinstance(c, Range):
                iv.cut(">=", c.lo)
                iv.cut("<=", c.hi)
            else:
                iv.cut(c.op, c.literal)
        return not iv.empty()
    for axis in AXES:
        iv = _Interval()
        for c in clauses:
            if c.axis == axis:
                iv.cut(c.op, c.literal)
        if iv.empty():
            return False
    return True


def condition_satisfiable(decl: InputDecl, *conditions: Condition) -> bool:
    """Whether some value in ``decl``'s domain meets every condition."""
    return _clauses_satisfiable(decl.kind, (c for cond in conditions for c in cond.clauses))


def _guard_dnf(g) -> list[list[GuardAtom]]:
    if isinstance(g, GuardAtom):
        return [[g]]
    if isinstance(g, GuardOr):
        return [term for item in g.items for term in _guard_dnf(item)]
    terms: list[list[GuardAtom]] = [[]]
    for item in g.items:
        terms = [a + b for a in terms for b in _guard_dnf(item)]
    return terms


def _term_satisfiable(doc: CatDocument, atoms: Sequence[GuardAtom]) -> bool:
    by_input: dict[str, list] = {}
    for a in atoms:
        by_input.setdefault(a.input, []).append(a.clause)
    return all(_clauses_satisfiable(doc.input(name).kind, cls)
               for name, cls in by_input.items())


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(doc: CatDocument, filename: Optional[str] = None) -> list[Diagnostic]:
    """Consistency diagnostics, ordered by source position then code."""
    diags = structural_problems(doc) + dangling_transitions(doc)
    broken = any(d.is_error and d.code != "dangling-transition" for d in diags)
    behaviors = behavior_set(doc)

    inbound: set[str] = set()
    for _, sub in doc.subrows():
        for t in sub.transitions:
            if t.target != sub.behavior:
                inbound.add(t.target)
    initial = doc.initial_behavior
    for b in behaviors:
        if b != initial and b not in inbound:
            first = doc.subrows_of(b)[0][1]
            diags.append(warning("unreachable-behavior",
                                 f"no transition leads into {b} and it is not the initial "
                                 f"behavior ({initial})", first.span))

    for row in doc.rows:
        seen: dict[tuple, SubRow] = {}
        for sub in row.subrows:
            key = (sub.behavior, frozenset((c.input, c.condition) for c in sub.cells))
            if key in seen:
                diags.append(warning(
                    "duplicate-subrow",
                    f"{row.output} has two identical sub-rows for {sub.behavior}", sub.span,
                    related=((seen[key].span, "first occurrence"),)))
            else:
                seen[key] = sub

    if not broken:
        for ref, sub in doc.subrows():
            for c in sub.cells:
                decl = doc.input(c.input)
                if not condition_satisfiable(decl, c.condition):
                    diags.append(warning(
                        "always-false-cell",
                        f"{c.input} : {c.condition.render()} can never hold within the "
                        f"declared {decl.kind.render()}", c.span))
        diags.extend(_nondeterminism(doc))

    used = {name for name, _ in referenced_inputs(doc)}
    for d in doc.inputs:
        if d.name not in used:
            diags.append(info("unused-input", f"input {d.name} is blank in every sub-row",
                              d.span))

    if filename is not None:
        diags = [Diagnostic(d.severity, d.code, d.message, d.span, d.related, filename)
                 for d in diags]
    return sorted(diags, key=lambda d: (d.span.line, d.span.col, d.code, d.message))


def _nondeterminism(doc: CatDocument) -> list[Diagnostic]:
    out = []
    for b in behavior_set(doc):
        rules = [t for _, sub in doc.subrows_of(b) for t in sub.transitions]
        for i, r1 in enumerate(rules):
            for r2 in rules[i + 1:]:
                if r1.target == r2.target:
                    continue
                if any(_term_satisfiable(doc, t1 + t2)
                       for t1 in _guard_dnf(r1.guard) for t2 in _guard_dnf(r2.guard)):
                    out.append(warning(
                        "nondeterministic-transition",
                        f"in {b}, transitions to {r1.target} and {r2.target} can fire together;"
                        f" the earlier rule wins", r2.span,
                        related=((r1.span, f"rule to {r1.target}"),)))
    return out


# ---------------------------------------------------------------------------
# Boundary-value grid
# ---------------------------------------------------------------------------


def _constants(docs: Sequence[CatDocument]) -> dict[tuple[str, Optional[str]], set[Decimal]]:
    """Numeric constants per (input, axis) across cells and guards."""
    out: dict[tuple[str, Optional[str]], set[Decimal]] = {}

    def add(name, axis, value):
        if isinstance(value, Decimal):
            out.setdefault((name, axis), set()).add(value)

    for doc in docs:
        for _, sub in doc.subrows():
            for c in sub.cells:
                for cl in c.condition.clauses:
                    if isinstance(cl, Compare):
                        add(c.input, None, cl.literal)
                    elif isinstance(cl, Range):
                        add(c.input, None, cl.lo)
                        add(c.input, None, cl.hi)
                    elif isinstance(cl, AxisCompare):
                        add(c.input, cl.axis, cl.literal)
            for t in sub.transitions:
                for a in t.guard.atoms():
                    add(a.input, a.axis, a.literal)
    return out


def _around(consts: Iterable[Decimal]) -> set[Decimal]:
    pts = set()
    for c in consts:
        u = ulp(c)
        pts.update((c - u, c, c + u))
    return pts


def _probes(decl: InputDecl, consts) -> list[Value]:
    k = decl.kind
    if isinstance(k, BoolKind):
        return [False, True]
    if isinstance(k, EnumKind):
        return list(k.members)
    if isinstance(k, NumberKind):
        if not k.bounded:
            raise CatError("unbounded-input", f"number input {decl.name} has no domain", decl.span)
        pts = {p for p in _around(consts.get((decl.name, None), ())) if k.lo <= p <= k.hi}
        pts.update((k.lo, k.hi))
        return sorted(pts)
    per_axis = []
    for axis in AXES:
        pts = _around(consts.get((decl.name, axis), ()))
        pts.add(Decimal(0))
        per_axis.append(sorted(pts))
    return [Vec3(*xyz) for xyz in itertools.product(*per_axis)]


def discretization(doc: CatDocument, *others: CatDocument) -> dict[str, list[Value]]:
    """Probe values for every input of ``doc`` (constants also drawn from ``others``)."""
    consts = _constants((doc,) + others)
    return {d.name: _probes(d, consts) for d in doc.inputs}


def relevant_inputs(doc: CatDocument, behavior: str) -> list[str]:
    """Inputs that can influence evaluation while ``behavior`` is active."""
    used = set()
    for _, sub in doc.subrows_of(behavior):
        used.update(c.input for c in sub.cells)
        for t in sub.transitions:
            used.update(a.input for a in t.guard.atoms())
    return [n for n in doc.input_names if n in used]


def probe_grid(doc: CatDocument, behavior: str, probes: dict[str, list[Value]],
               relevant_only: bool = True, limit: Optional[int] = None) -> Iterator[Valuation]:
    """Valuations over the probe cross product, in lexicographic column order.

    With ``relevant_only`` inputs the behavior never reads stay at their
    first probe value; they cannot change the outcome.
    """
    names = list(doc.input_names)
    keep = set(relevant_inputs(doc, behavior)) if relevant_only else set(names)
    axes = [probes[n] if n in keep else probes[n][:1] for n in names]
    for combo in itertools.islice(itertools.product(*axes), limit):
        yield Valuation(dict(zip(names, combo)), behavior)


def grid_size(doc: CatDocument, behavior: str, probes, relevant_only: bool = True) -> int:
    keep = set(relevant_inputs(doc, behavior)) if relevant_only else set(doc.input_names)
    n = 1
    for name in doc.input_names:
        n *= len(probes[name]) if name in keep else 1
    return n


@dataclass(frozen=True)
class CoverageReport:
    uncovered: tuple[Valuation, ...]
    enumerated_count: int
    discretization: dict
    truncated: tuple[str, ...] = ()

    @property
    def total(self) -> bool:
        return not self.uncovered

    def witnesses_for(self, behavior: str) -> list[Valuation]:
        return [v for v in self.uncovered if v.active_behavior == behavior]


def coverage(doc: CatDocument, max_cases: int = DEFAULT_MAX_CASES) -> CoverageReport:
    """Find valuations where the active behavior promises nothing and stays put.

    ``max_cases`` caps the grid per behavior; behaviors whose grid was cut
    short are listed in ``truncated``.
    """
    probes = discretization(doc)
    uncovered = []
    count = 0
    truncated = []
    for b in behavior_set(doc):
        if grid_size(doc, b, probes) > max_cases:
            truncated.append(b)
        for v in probe_grid(doc, b, probes, limit=max_cases):
            count += 1
            if evaluate(doc, v).undefined_response:
                uncovered.append(v)
    return CoverageReport(tuple(uncovered), count, probes, tuple(truncated))


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefinementReport:
    inherited_inputs: tuple[str, ...]
    violations: tuple[Diagnostic, ...]

    @property
    def accepted(self) -> bool:
        return not self.violations


def _joint_witness(parent_sub: SubRow, child_sub: SubRow, decls: dict[str, InputDecl],
                   probes: dict[str, list[Value]]) -> Optional[dict[str, Value]]:
    pc = parent_sub.cell_map
    cc = child_sub.cell_map
    witness = {}
    for name in dict.fromkeys(list(pc) + list(cc)):
        conds = [m[name] for m in (pc, cc) if name in m]
        for p in probes[name]:
            if all(c.holds(p) for c in conds):
                witness[name] = p
                break
        else:
            return None
    return witness


def check_refinement(parent: CatDocument, child: CatDocument) -> RefinementReport:
    link = child.refines
    if link is None:
        raise CatError("bad-link", f"{child.name} does not declare what it refines")
    if link.document != parent.name:
        raise CatError("bad-link", f"{child.name} refines {link.document!r}, not {parent.name!r}",
                       link.span)
    if link.behavior not in behavior_set(parent):
        raise CatError("bad-link", f"{parent.name} has no behavior {link.behavior}", link.span)

    violations = []
    local = {d.name for d in child.inputs}
    upstream = {d.name: d for d in parent.inputs}
    reported = set()
    for name, span in referenced_inputs(child):
        if name not in local and name not in upstream and name not in reported:
            reported.add(name)
            violations.append(error("orphan-input",
                                    f"{name} is declared neither here nor in {parent.name}", span))

    inherited = []
    for d in child.inputs:
        p = upstream.get(d.name)
        if p is None:
            continue
        if p.kind != d.kind:
            violations.append(error("kind-drift",
                                    f"{d.name} is {d.kind.render()} here but "
                                    f"{p.kind.render()} in {parent.name}", d.span,
                                    related=((p.span, "parent declaration"),)))
        else:
            inherited.append(d.name)

    behaviors = set(behavior_set(child))
    for _, sub in child.subrows():
        for t in sub.transitions:
            if t.target != EXIT and t.target not in behaviors:
                violations.append(error("open-transition",
                                        f"transition leaves {child.name} to {t.target}; "
                                        f"use ^exit to return to {parent.name}", t.span))

    if not any(v.code in ("orphan-input", "kind-drift") for v in violations):
        decls = {d.name: d for d in parent.inputs}
        decls.update({d.name: d for d in child.inputs})
        consts = _constants((parent, child))
        probes = {n: _probes(d, consts) for n, d in decls.items()}
        parent_subs = [s for _, s in parent.subrows_of(link.behavior)]
        child_subs = [s for _, s in child.subrows()]
        found = any(_joint_witness(p, c, decls, probes) is not None
                    for p in parent_subs for c in child_subs)
        if not found:
            violations.append(error(
                "vacuous-decomposition",
                f"no probe valuation that activates {link.behavior} in {parent.name} "
                f"fires any sub-row of {child.name}", link.span))

    return RefinementReport(tuple(inherited), tuple(violations))


# ---------------------------------------------------------------------------
# Edits
# ---------------------------------------------------------------------------


def add_input_column(doc: CatDocument, decl: InputDecl) -> CatDocument:
    """A copy of ``doc`` with a new, everywhere-blank input column appended."""
    if doc.input(decl.name) is not None:
        raise CatError("duplicate-input", f"{doc.name} already declares {decl.name}")
    return CatDocument(name=doc.name, level=doc.level, refines=doc.refines,
                       inputs=doc.inputs + (decl,), rows=doc.rows, aliases=doc.aliases,
                       span=doc.span)
