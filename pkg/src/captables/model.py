"""Core data model for capability analysis tables.

A table (``CatDocument``) declares its inputs (columns) and its output rows.
Each output row holds one or more sub-rows; a sub-row is tagged with the
behavior it belongs to and carries one condition per non-blank cell.  Cells
within a sub-row combine by AND, sub-rows of one output combine by OR.

Everything here is immutable.  Source spans are carried alongside the
elements but never take part in equality, so a parsed document compares
equal to a rendered-and-reparsed copy of itself.
"""

from __future__ import annotations

import operator
from collections import namedtuple
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import cached_property
from typing import Any as _Any
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

EXIT = "^exit"
AXES = ("x", "y", "z")
CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")

_OP_FUNCS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}

SEVERITIES = ("error", "warning", "info")


# ---------------------------------------------------------------------------
# Spans, diagnostics, errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    """1-based source range; ``end_col`` is exclusive."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"

    def slice(self, text: str) -> str:
        lines = text.splitlines()
        if self.line == self.end_line:
            return lines[self.line - 1][self.col - 1 : self.end_col - 1]
        parts = [lines[self.line - 1][self.col - 1 :]]
        parts.extend(lines[self.line : self.end_line - 1])
        parts.append(lines[self.end_line - 1][: self.end_col - 1])
        return "\n".join(parts)


NO_SPAN = Span(0, 0, 0, 0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    span: Span = NO_SPAN
    related: tuple[tuple[Span, str], ...] = ()
    file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity {self.severity!r}")

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "file": self.file,
            "line": self.span.line,
            "col": self.span.col,
        }

    def format(self) -> str:
        where = f"{self.file or '<input>'}:{self.span.line}:{self.span.col}"
        return f"{where}: {self.severity}[{self.code}]: {self.message}"


def error(code: str, message: str, span: Span = NO_SPAN, **kw) -> Diagnostic:
    return Diagnostic("error", code, message, span, **kw)


def warning(code: str, message: str, span: Span = NO_SPAN, **kw) -> Diagnostic:
    return Diagnostic("warning", code, message, span, **kw)


def info(code: str, message: str, span: Span = NO_SPAN, **kw) -> Diagnostic:
    return Diagnostic("info", code, message, span, **kw)


class CatError(Exception):
    """Raised when an operation's precondition or a model invariant fails.

    ``code`` is the stable short identifier also used in diagnostics.
    """

    def __init__(self, code: str, message: str, span: Span = NO_SPAN,
                 diagnostics: Sequence[Diagnostic] = ()):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.span = span
        self.diagnostics = tuple(diagnostics) or (error(code, message, span),)


def _require(ok: bool, code: str, message: str, span: Span = NO_SPAN) -> None:
    if not ok:
        raise CatError(code, message, span)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

Vec3 = namedtuple("Vec3", AXES)

Literal = Union[bool, Decimal, str]
Value = Union[bool, Decimal, str, Vec3]


def to_decimal(x: _Any) -> Decimal:
    """Exact decimal for ints, decimal strings and floats (via ``repr``)."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(x, Decimal):
        return x
    if isinstance(x, float):
        return Decimal(repr(x))
    if isinstance(x, (int, str)):
        try:
            return Decimal(x)
        except InvalidOperation:
            raise TypeError(f"not a number: {x!r}") from None
    raise TypeError(f"not a number: {x!r}")


def format_number(d: Decimal) -> str:
    return str(d)


def ulp(d: Decimal) -> Decimal:
    """One unit in the last decimal place of ``d`` as written (``20`` -> 1, ``0.25`` -> 0.01)."""
    exp = d.as_tuple().exponent
    return Decimal(1).scaleb(exp)


def format_literal(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Decimal):
        return format_number(value)
    return value


def format_value(value: Value) -> str:
    if isinstance(value, Vec3):
        return "(" + ", ".join(format_number(c) for c in value) + ")"
    return format_literal(value)


# ---------------------------------------------------------------------------
# Input declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoolKind:
    name = "bool"

    def render(self) -> str:
        return "bool"


@dataclass(frozen=True)
class NumberKind:
    lo: Optional[Decimal] = None
    hi: Optional[Decimal] = None
    unit: Optional[str] = None
    name = "number"

    def __post_init__(self) -> None:
        _require((self.lo is None) == (self.hi is None), "bad-domain",
                 "a number domain needs both bounds")
        if self.lo is not None:
            _require(self.lo <= self.hi, "bad-domain",
                     f"empty domain [{self.lo}, {self.hi}]")

    @property
    def bounded(self) -> bool:
        return self.lo is not None

    def render(self) -> str:
        out = "number"
        if self.unit:
            out += f" unit {self.unit}"
        if self.bounded:
            out += f" domain [{format_number(self.lo)}, {format_number(self.hi)}]"
        return out


@dataclass(frozen=True)
class EnumKind:
    members: tuple[str, ...]
    name = "enum"

    def __post_init__(self) -> None:
        _require(len(self.members) > 0, "empty-enum", "enumeration has no members")
        _require(len(set(self.members)) == len(self.members), "duplicate-member",
                 "enumeration members must be unique")

    def render(self) -> str:
        return "enum {" + ", ".join(self.members) + "}"


@dataclass(frozen=True)
class Vec3Kind:
    unit: Optional[str] = None
    name = "vec3"

    def render(self) -> str:
        return "vec3" + (f" unit {self.unit}" if self.unit else "")


Kind = Union[BoolKind, NumberKind, EnumKind, Vec3Kind]


@dataclass(frozen=True)
class InputDecl:
    name: str
    kind: Kind
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def check_value(self, value: Value) -> Optional[str]:
        """Return a problem description, or None if ``value`` fits the declaration."""
        k = self.kind
        if isinstance(k, BoolKind):
            return None if isinstance(value, bool) else "expected true or false"
        if isinstance(k, NumberKind):
            if isinstance(value, bool) or not isinstance(value, Decimal):
                return "expected a number"
            if k.bounded and not (k.lo <= value <= k.hi):
                return f"{format_number(value)} outside domain [{k.lo}, {k.hi}]"
            return None
        if isinstance(k, EnumKind):
            if value not in k.members:
                return f"expected one of {{{', '.join(k.members)}}}"
            return None
        if not isinstance(value, Vec3) or not all(
                isinstance(c, Decimal) for c in value):
            return "expected a 3-vector"
        return None


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnyClause:
    """The input must be present; no constraint on its value."""

    def holds(self, value: Value) -> bool:
        return True

    def render(self) -> str:
        return "any"


@dataclass(frozen=True)
class Compare:
    op: str
    literal: Literal

    def __post_init__(self) -> None:
        _require(self.op in CMP_OPS, "syntax", f"unknown operator {self.op!r}")

    def holds(self, value: Value) -> bool:
        return _OP_FUNCS[self.op](value, self.literal)

    def render(self) -> str:
        return f"{self.op} {format_literal(self.literal)}"


@dataclass(frozen=True)
class Range:
    """Closed interval membership: ``in [lo, hi]``."""

    lo: Decimal
    hi: Decimal

    def __post_init__(self) -> None:
        _require(self.lo <= self.hi, "bad-range", f"empty range [{self.lo}, {self.hi}]")

    def holds(self, value: Value) -> bool:
        return self.lo <= value <= self.hi

    def render(self) -> str:
        return f"in [{format_number(self.lo)}, {format_number(self.hi)}]"


@dataclass(frozen=True)
class Membership:
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        _require(len(self.members) > 0, "syntax", "empty member set")

    def holds(self, value: Value) -> bool:
        return value in self.members

    def render(self) -> str:
        return "in {" + ", ".join(self.members) + "}"


@dataclass(frozen=True)
class AxisCompare:
    """Comparison on one component of a vec3 input, e.g. ``z > 0``."""

    axis: str
    op: str
    literal: Decimal

    def __post_init__(self) -> None:
        _require(self.axis in AXES, "bad-axis", f"unknown axis {self.axis!r}")
        _require(self.op in CMP_OPS, "syntax", f"unknown operator {self.op!r}")

    def holds(self, value: Value) -> bool:
        return _OP_FUNCS[self.op](getattr(value, self.axis), self.literal)

    def render(self) -> str:
        return f"{self.axis} {self.op} {format_number(self.literal)}"


Clause = Union[AnyClause, Compare, Range, Membership, AxisCompare]


def clause_kind_problem(clause: Clause, kind: Kind) -> Optional[str]:
    """Why ``clause`` cannot constrain an input of ``kind`` (None if it can)."""
    if isinstance(clause, AnyClause):
        return None
    if isinstance(kind, BoolKind):
        if isinstance(clause, Compare) and isinstance(clause.literal, bool):
            if clause.op in ("==", "!="):
                return None
            return f"operator {clause.op} is not defined on bool"
        return "bool inputs take == true/false or != true/false"
    if isinstance(kind, NumberKind):
        if isinstance(clause, Compare) and isinstance(clause.literal, Decimal):
            return None
        if isinstance(clause, Range):
            return None
        return "number inputs take numeric comparisons or in [lo, hi]"
    if isinstance(kind, EnumKind):
        if isinstance(clause, Compare) and isinstance(clause.literal, str):
            if clause.op not in ("==", "!="):
                return f"operator {clause.op} is not defined on enum"
            if clause.literal not in kind.members:
                return f"{clause.literal!r} is not a member"
            return None
        if isinstance(clause, Membership):
            bad = [m for m in clause.members if m not in kind.members]
            return f"{bad[0]!r} is not a member" if bad else None
        return "enum inputs take == member, != member or in {members}"
    if isinstance(clause, AxisCompare):
        return None
    return "vec3 inputs take per-axis comparisons such as z > 0"


@dataclass(frozen=True)
class Condition:
    """Conjunction of clauses on a single input (one table cell)."""

    clauses: tuple[Clause, ...]

    def __post_init__(self) -> None:
        _require(len(self.clauses) > 0, "syntax", "empty condition")

    def holds(self, value: Value) -> bool:
        return all(c.holds(value) for c in self.clauses)

    def render(self) -> str:
        if all(isinstance(c, AnyClause) for c in self.clauses):
            return "any"
        return " & ".join(c.render() for c in self.clauses if not isinstance(c, AnyClause))

    @classmethod
    def of(cls, *clauses: Clause) -> "Condition":
        return cls(tuple(clauses))


ANY = Condition((AnyClause(),))


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuardAtom:
    input: str
    op: str
    literal: Literal
    axis: Optional[str] = None

    def __post_init__(self) -> None:
        _require(self.op in CMP_OPS, "syntax", f"unknown operator {self.op!r}")
        _require(self.axis is None or self.axis in AXES, "bad-axis",
                 f"unknown axis {self.axis!r}")

    @cached_property
    def clause(self) -> Clause:
        if self.axis is not None:
            return AxisCompare(self.axis, self.op, self.literal)
        return Compare(self.op, self.literal)

    def holds(self, values: Mapping[str, Value]) -> bool:
        return self.clause.holds(values[self.input])

    def atoms(self) -> Iterator["GuardAtom"]:
        yield self

    def render(self) -> str:
        lhs = self.input + (f".{self.axis}" if self.axis else "")
        return f"{lhs} {self.op} {format_literal(self.literal)}"


@dataclass(frozen=True)
class GuardAnd:
    items: tuple["Guard", ...]

    def __post_init__(self) -> None:
        _require(len(self.items) >= 2, "syntax", "conjunction needs two operands")

    def holds(self, values: Mapping[str, Value]) -> bool:
        return all(g.holds(values) for g in self.items)

    def atoms(self) -> Iterator[GuardAtom]:
        for g in self.items:
            yield from g.atoms()

    def render(self) -> str:
        return " & ".join(_render_operand(g) for g in self.items)


@dataclass(frozen=True)
class GuardOr:
    items: tuple["Guard", ...]

    def __post_init__(self) -> None:
        _require(len(self.items) >= 2, "syntax", "disjunction needs two operands")

    def holds(self, values: Mapping[str, Value]) -> bool:
        return any(g.holds(values) for g in self.items)

    def atoms(self) -> Iterator[GuardAtom]:
        for g in self.items:
            yield from g.atoms()

    def render(self) -> str:
        return " | ".join(_render_operand(g) for g in self.items)


Guard = Union[GuardAtom, GuardAnd, GuardOr]


def _render_operand(g: Guard) -> str:
    # nested compound guards are always parenthesized so parsing restores the tree
    if isinstance(g, GuardAtom):
        return g.render()
    return f"({g.render()})"


# ---------------------------------------------------------------------------
# Table structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionRule:
    target: str
    guard: Guard
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def render(self) -> str:
        return f"-> {self.target} when {self.guard.render()}"


@dataclass(frozen=True)
class Cell:
    input: str
    condition: Condition
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class SubRow:
    behavior: str
    cells: tuple[Cell, ...]
    transitions: tuple[TransitionRule, ...] = ()
    note: str = ""
    span: Span = field(default=NO_SPAN, compare=False, repr=False)
    note_span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        _require(len(self.cells) > 0, "empty-subrow",
                 f"sub-row for {self.behavior} constrains no input", self.span)
        names = [c.input for c in self.cells]
        _require(len(set(names)) == len(names), "duplicate-cell",
                 f"sub-row for {self.behavior} has two cells for one input", self.span)

    def cell(self, name: str) -> Optional[Cell]:
        for c in self.cells:
            if c.input == name:
                return c
        return None

    @property
    def cell_map(self) -> dict[str, Condition]:
        return {c.input: c.condition for c in self.cells}


@dataclass(frozen=True)
class OutputRow:
    output: str
    subrows: tuple[SubRow, ...]
    description: str = ""

    def __post_init__(self) -> None:
        _require(len(self.subrows) > 0, "empty-row", f"row {self.output} has no sub-rows")


@dataclass(frozen=True)
class SubRowRef:
    """Stable address of a sub-row: output name plus index within that row."""

    output: str
    index: int

    def __str__(self) -> str:
        return f"{self.output}[{self.index}]"


@dataclass(frozen=True)
class Refines:
    document: str
    behavior: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class CatDocument:
    name: str
    level: int = 0
    refines: Optional[Refines] = None
    inputs: tuple[InputDecl, ...] = ()
    rows: tuple[OutputRow, ...] = ()
    aliases: tuple[tuple[str, str], ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        for d in structural_problems(self):
            raise CatError(d.code, d.message, d.span)

    @classmethod
    def unchecked(cls, **fields) -> "CatDocument":
        """Build without invariant checks, for analyzers that inspect broken tables."""
        doc = object.__new__(cls)
        defaults = {"level": 0, "refines": None, "inputs": (), "rows": (),
                    "aliases": (), "span": NO_SPAN}
        defaults.update(fields)
        for key, value in defaults.items():
            object.__setattr__(doc, key, value)
        return doc

    # -- lookup -----------------------------------------------------------

    def input(self, name: str) -> Optional[InputDecl]:
        for d in self.inputs:
            if d.name == name:
                return d
        return None

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.inputs)

    def row(self, output: str) -> Optional[OutputRow]:
        for r in self.rows:
            if r.output == output:
                return r
        return None

    @cached_property
    def _subrow_index(self) -> tuple[tuple[tuple[SubRowRef, SubRow], ...], dict]:
        # documents are immutable, so the flat listing is built once
        flat = tuple((SubRowRef(r.output, i), s) for r in self.rows
                     for i, s in enumerate(r.subrows))
        by_behavior: dict[str, list] = {}
        for ref, s in flat:
            by_behavior.setdefault(s.behavior, []).append((ref, s))
        return flat, by_behavior

    def subrows(self) -> Iterator[tuple[SubRowRef, SubRow]]:
        """All sub-rows in document order (row, then sub-row)."""
        return iter(self._subrow_index[0])

    def subrow(self, ref: SubRowRef) -> SubRow:
        row = self.row(ref.output)
        if row is None or not 0 <= ref.index < len(row.subrows):
            raise KeyError(str(ref))
        return row.subrows[ref.index]

    def subrows_of(self, behavior: str) -> list[tuple[SubRowRef, SubRow]]:
        return list(self._subrow_index[1].get(behavior, ()))

    @property
    def initial_behavior(self) -> Optional[str]:
        """The first row's behavior; tables have no other way to mark the start state."""
        bs = behavior_set(self)
        return bs[0] if bs else None

    def alias_target(self, output: str) -> str:
        """Parent output that a child output stands for (itself unless aliased)."""
        for child, parent in self.aliases:
            if child == output:
                return parent
        return output

    @property
    def source_spans(self) -> dict[tuple, Span]:
        spans: dict[tuple, Span] = {("document",): self.span}
        if self.refines is not None:
            spans[("refines",)] = self.refines.span
        for d in self.inputs:
            spans[("input", d.name)] = d.span
        for ref, s in self.subrows():
            spans[("subrow", ref.output, ref.index)] = s.span
            for c in s.cells:
                spans[("cell", ref.output, ref.index, c.input)] = c.span
            for j, t in enumerate(s.transitions):
                spans[("transition", ref.output, ref.index, j)] = t.span
            if s.note:
                spans[("note", ref.output, ref.index)] = s.note_span
        return spans


def referenced_inputs(doc: CatDocument) -> Iterator[tuple[str, Span]]:
    for _, s in doc.subrows():
        for c in s.cells:
            yield c.input, c.span
        for t in s.transitions:
            for atom in t.guard.atoms():
                yield atom.input, t.span


def structural_problems(doc: CatDocument) -> list[Diagnostic]:
    """Invariant violations that make a document unusable.

    Transition targets are deliberately not checked here; an unknown target is
    reported by :func:`dangling_transitions` so analyzers can still load the
    table and point at the offending rule.
    """
    out: list[Diagnostic] = []
    if doc.level < 0:
        out.append(error("bad-level", "level must be non-negative", doc.span))
    if doc.refines is not None and doc.level < 1:
        out.append(error("refines-on-root", "a level 0 table cannot refine another",
                         doc.refines.span))
    seen: set[str] = set()
    for d in doc.inputs:
        if d.name in seen:
            out.append(error("duplicate-input", f"input {d.name} declared twice", d.span))
        seen.add(d.name)
    outputs: set[str] = set()
    for r in doc.rows:
        if r.output in outputs:
            out.append(error("duplicate-output", f"output {r.output} has two rows",
                             r.subrows[0].span))
        outputs.add(r.output)
    decls = {d.name: d for d in doc.inputs}
    for _, s in doc.subrows():
        for c in s.cells:
            decl = decls.get(c.input)
            if decl is None:
                out.append(error("unknown-input", f"input {c.input} is not declared", c.span))
                continue
            for clause in c.condition.clauses:
                why = clause_kind_problem(clause, decl.kind)
                if why:
                    out.append(error("kind-mismatch", f"{c.input}: {why}", c.span))
        for t in s.transitions:
            for atom in t.guard.atoms():
                decl = decls.get(atom.input)
                if decl is None:
                    out.append(error("unknown-input",
                                     f"input {atom.input} is not declared", t.span))
                    continue
                if isinstance(decl.kind, Vec3Kind) and atom.axis is None:
                    why = "vec3 inputs must be compared per axis, e.g. velocity.z > 0"
                elif atom.axis is not None and not isinstance(decl.kind, Vec3Kind):
                    why = "only vec3 inputs have axes"
                else:
                    why = clause_kind_problem(atom.clause, decl.kind)
                if why:
                    out.append(error("kind-mismatch", f"{atom.input}: {why}", t.span))
            if t.target == EXIT and doc.refines is None:
                out.append(error("exit-outside-refinement",
                                 "^exit is only meaningful in a refining table", t.span))
    return out


def dangling_transitions(doc: CatDocument) -> list[Diagnostic]:
    behaviors = set(behavior_set(doc))
    out = []
    for _, s in doc.subrows():
        for t in s.transitions:
            if t.target == EXIT:
                continue
            if t.target not in behaviors:
                out.append(error("dangling-transition",
                                 f"transition target {t.target} has no sub-row in this table",
                                 t.span))
    return out


# ---------------------------------------------------------------------------
# Valuations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Valuation:
    """Snapshot of every input's value plus the active behavior."""

    values: Mapping[str, Value]
    active_behavior: str

    def __post_init__(self) -> None:
        # freeze a private copy so callers can't mutate it underneath us
        object.__setattr__(self, "values", _FrozenDict(self.values))

    def with_values(self, **changes: Value) -> "Valuation":
        new = dict(self.values)
        new.update(changes)
        return Valuation(new, self.active_behavior)

    def with_behavior(self, behavior: str) -> "Valuation":
        return Valuation(self.values, behavior)

    def restricted(self, names: Iterable[str]) -> "Valuation":
        return Valuation({n: self.values[n] for n in names}, self.active_behavior)


class _FrozenDict(dict):
    def _readonly(self, *a, **kw):
        raise TypeError("valuation values are read-only")

    __setitem__ = __delitem__ = clear = pop = popitem = setdefault = update = _readonly

    def __hash__(self) -> int:  # type: ignore[override]
        return hash(tuple(sorted(self.items(), key=lambda kv: kv[0])))


def coerce_value(decl: InputDecl, raw: _Any) -> Value:
    """Convert a JSON-ish value into the model's value type for ``decl``."""
    k = decl.kind
    if isinstance(k, BoolKind):
        if isinstance(raw, str) and raw in ("true", "false"):
            return raw == "true"
        if isinstance(raw, bool):
            return raw
        raise CatError("schema-mismatch", f"{decl.name}: expected true or false, got {raw!r}")
    if isinstance(k, NumberKind):
        try:
            return to_decimal(raw)
        except TypeError:
            raise CatError("schema-mismatch",
                           f"{decl.name}: expected a number, got {raw!r}") from None
    if isinstance(k, EnumKind):
        if isinstance(raw, str):
            return raw
        raise CatError("schema-mismatch", f"{decl.name}: expected a member name, got {raw!r}")
    try:
        if isinstance(raw, Mapping):
            return Vec3(*(to_decimal(raw[a]) for a in AXES))
        if isinstance(raw, str):
            raw = raw.strip("()").split(",")
        parts = list(raw)
        if len(parts) != 3:
            raise ValueError
        return Vec3(*(to_decimal(p.strip() if isinstance(p, str) else p) for p in parts))
    except (KeyError, TypeError, ValueError):
        raise CatError("schema-mismatch",
                       f"{decl.name}: expected a 3-vector, got {raw!r}") from None


def make_valuation(decls: Iterable[InputDecl], raw: Mapping[str, _Any],
                   active_behavior: str) -> Valuation:
    """Build a checked valuation: total over ``decls``, every value in its domain."""
    decls = list(decls)
    names = {d.name for d in decls}
    missing = [d.name for d in decls if d.name not in raw]
    if missing:
        raise CatError("schema-mismatch", "no value for " + ", ".join(missing))
    extra = sorted(set(raw) - names)
    if extra:
        raise CatError("schema-mismatch", "undeclared input " + ", ".join(extra))
    values = {}
    for d in decls:
        v = coerce_value(d, raw[d.name])
        why = d.check_value(v)
        if why:
            raise CatError("domain-violation", f"{d.name}: {why}")
        values[d.name] = v
    return Valuation(values, active_behavior)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def behavior_set(doc: CatDocument) -> tuple[str, ...]:
    """Distinct behaviors named by sub-rows, in order of first appearance."""
    return tuple(doc._subrow_index[1])


@dataclass(frozen=True)
class TableStats:
    behaviors: int = 0
    outputs: int = 0
    inputs: int = 0
    pairs: int = 0

    def to_json(self) -> dict:
        return {"behaviors": self.behaviors, "outputs": self.outputs,
                "inputs": self.inputs, "pairs": self.pairs}


def table_stats(docs: Iterable[CatDocument]) -> TableStats:
    """Per-document counts summed over ``docs``; pairs are non-blank cells."""
    b = o = i = p = 0
    for doc in docs:
        b += len(behavior_set(doc))
        o += len(doc.rows)
        i += len(doc.inputs)
        p += sum(len(s.cells) for _, s in doc.subrows())
    return TableStats(b, o, i, p)
