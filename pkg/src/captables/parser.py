"""Reader and canonical writer for the line-oriented ``.cat`` table format.

Example::

    cat "roomba-core"
    level 0

    input batteryLevel : number unit percent domain [0, 100]
    input warningLight : bool

    row wheelsMove : Drive
      batteryLevel : > 20
      warningLight : == false
      -> Charging when batteryLevel <= 20
      note "drive only with charge and no warning"

Parsing never raises on bad input; every problem becomes a diagnostic with a
source span, and a document is only returned when no error was found.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from .model import (
    AXES,
    EXIT,
    NO_SPAN,
    AnyClause,
    AxisCompare,
    BoolKind,
    CatDocument,
    CatError,
    Cell,
    Compare,
    Condition,
    Diagnostic,
    EnumKind,
    GuardAnd,
    GuardAtom,
    GuardOr,
    InputDecl,
    Membership,
    NumberKind,
    OutputRow,
    Range,
    Refines,
    Span,
    SubRow,
    TransitionRule,
    Vec3Kind,
    dangling_transitions,
    error,
    structural_problems,
    warning,
)

__all__ = ["ParseResult", "parse", "parse_file", "parse_input_decl", "render"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<arrow>->)
  | (?P<exit>\^exit)
  | (?P<num>-?\d+(?:\.\d+)?)
  | (?P<op><=|>=|==|!=|<|>)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[:,\[\]{}()&|=.])
    """,
    re.VERBOSE,
)

_KEYWORDS = frozenset({"cat", "level", "refines", "alias", "input", "row"})
_RESERVED = frozenset({"true", "false", "any", "in", "when"})


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int  # 1-based

    @property
    def end_col(self) -> int:
        return self.col + len(self.text)

    @property
    def span(self) -> Span:
        return Span(self.line, self.col, self.line, self.end_col)


class _SyntaxError(Exception):
    def __init__(self, message: str, span: Span, code: str = "syntax"):
        super().__init__(message)
        self.message = message
        self.span = span
        self.code = code


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            span = Span(lineno, pos + 1, lineno, pos + 2)
            if line[pos] == '"':
                raise _SyntaxError("unterminated string", Span(lineno, pos + 1, lineno, len(line) + 1))
            raise _SyntaxError(f"unexpected character {line[pos]!r}", span)
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), lineno, pos + 1))
        pos = m.end()
    return toks


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _Cursor:
    """Token cursor over one line."""

    def __init__(self, toks: list[_Tok], lineno: int, line_len: int):
        self.toks = toks
        self.i = 0
        self.lineno = lineno
        self.line_len = line_len

    def peek(self, offset: int = 0) -> Optional[_Tok]:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def _eol_span(self) -> Span:
        c = self.line_len + 1
        return Span(self.lineno, c, self.lineno, c + 1)

    def next(self, what: str = "token") -> _Tok:
        t = self.peek()
        if t is None:
            raise _SyntaxError(f"expected {what} before end of line", self._eol_span())
        self.i += 1
        return t

    def is_ident_string(self) -> bool:
        nxt = self.peek(1)
        return nxt is not None and nxt.kind == "string"

    def is_(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[_Tok]:
        if self.is_(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: Optional[str] = None, what: Optional[str] = None) -> _Tok:
        what = what or repr(text) if text else (what or kind)
        t = self.next(what)
        if t.kind != kind or (text is not None and t.text != text):
            raise _SyntaxError(f"expected {what}, found {t.text!r}", t.span)
        return t

    def ident(self, what: str = "identifier") -> _Tok:
        t = self.next(what)
        if t.kind != "ident":
            raise _SyntaxError(f"expected {what}, found {t.text!r}", t.span)
        return t

    def end(self) -> None:
        t = self.peek()
        if t is not None:
            raise _SyntaxError(f"unexpected {t.text!r} at end of line", t.span)

    def span_from(self, start: _Tok) -> Span:
        last = self.toks[self.i - 1] if self.i > 0 else start
        return Span(start.line, start.col, last.line, last.end_col)


# -- literal and clause parsing ---------------------------------------------


def _number(t: _Tok) -> Decimal:
    if t.kind != "num":
        raise _SyntaxError(f"expected a number, found {t.text!r}", t.span)
    return Decimal(t.text)


def _literal(cur: _Cursor):
    t = cur.next("literal")
    if t.kind == "num":
        return Decimal(t.text)
    if t.kind == "ident":
        if t.text == "true":
            return True
        if t.text == "false":
            return False
        if t.text in _RESERVED:
            raise _SyntaxError(f"{t.text!r} cannot be used as a value", t.span)
        return t.text
    raise _SyntaxError(f"expected a literal, found {t.text!r}", t.span)


def _ident_list(cur: _Cursor, close: str) -> tuple[str, ...]:
    items = [cur.ident("member name").text]
    while cur.accept("punct", ","):
        items.append(cur.ident("member name").text)
    cur.expect("punct", close)
    return tuple(items)


def _clause(cur: _Cursor):
    t = cur.peek()
    if t is None:
        cur.next("condition")
    if t.kind == "op":
        cur.next()
        return Compare(t.text, _literal(cur))
    if t.kind == "ident" and t.text == "in":
        cur.next()
        if cur.accept("punct", "["):
            lo = _number(cur.next("number"))
            cur.expect("punct", ",")
            hi = _number(cur.next("number"))
            close = cur.expect("punct", "]")
            if lo > hi:
                raise _SyntaxError(f"empty range [{lo}, {hi}]",
                                   Span(t.line, t.col, close.line, close.end_col), "bad-range")
            return Range(lo, hi)
        if cur.accept("punct", "{"):
            return Membership(_ident_list(cur, "}"))
        raise _SyntaxError("expected '[' or '{' after 'in'", cur.next("'['").span)
    if t.kind == "ident" and t.text in AXES:
        cur.next()
        op = cur.next("comparison operator")
        if op.kind != "op":
            raise _SyntaxError(f"expected a comparison operator, found {op.text!r}", op.span)
        return AxisCompare(t.text, op.text, _number(cur.next("number")))
    nxt = cur.peek(1)
    if t.kind == "ident" and nxt is not None and nxt.kind == "op":
        raise _SyntaxError(f"unknown axis {t.text!r}; use x, y or z", t.span, "bad-axis")
    raise _SyntaxError(f"expected a condition, found {t.text!r}", t.span)


def _condition(cur: _Cursor) -> Condition:
    if cur.accept("ident", "any"):
        return Condition((AnyClause(),))
    clauses = [_clause(cur)]
    while cur.accept("punct", "&"):
        clauses.append(_clause(cur))
    return Condition(tuple(clauses))


# -- guards -----------------------------------------------------------------


def _guard(cur: _Cursor):
    terms = [_gterm(cur)]
    while cur.accept("punct", "|"):
        terms.append(_gterm(cur))
    return terms[0] if len(terms) == 1 else GuardOr(tuple(terms))


def _gterm(cur: _Cursor):
    atoms = [_gatom(cur)]
    while cur.accept("punct", "&"):
        atoms.append(_gatom(cur))
    return atoms[0] if len(atoms) == 1 else GuardAnd(tuple(atoms))


def _gatom(cur: _Cursor):
    if cur.accept("punct", "("):
        g = _guard(cur)
        cur.expect("punct", ")")
        return g
    name = cur.ident("input name")
    axis = None
    if cur.accept("punct", "."):
        ax = cur.ident("axis")
        if ax.text not in AXES:
            raise _SyntaxError(f"unknown axis {ax.text!r}; use x, y or z", ax.span, "bad-axis")
        axis = ax.text
    op = cur.next("comparison operator")
    if op.kind != "op":
        raise _SyntaxError(f"expected a comparison operator, found {op.text!r}", op.span)
    return GuardAtom(name.text, op.text, _literal(cur), axis)


# -- kinds ------------------------------------------------------------------


def _kind(cur: _Cursor):
    t = cur.ident("input kind")
    if t.text == "bool":
        return BoolKind()
    if t.text == "number":
        unit = None
        if cur.accept("ident", "unit"):
            unit = cur.ident("unit name").text
        lo = hi = None
        if cur.accept("ident", "domain"):
            open_ = cur.expect("punct", "[")
            lo = _number(cur.next("number"))
            cur.expect("punct", ",")
            hi = _number(cur.next("number"))
            close = cur.expect("punct", "]")
            if lo > hi:
                raise _SyntaxError(f"empty domain [{lo}, {hi}]",
                                   Span(open_.line, open_.col, close.line, close.end_col),
                                   "bad-domain")
        else:
            raise _SyntaxError("number inputs need a domain [lo, hi]", t.span, "unbounded-input")
        return NumberKind(lo, hi, unit)
    if t.text == "enum":
        cur.expect("punct", "{")
        start = cur.peek()
        members = _ident_list(cur, "}")
        if len(set(members)) != len(members):
            raise _SyntaxError("enumeration members must be unique", cur.span_from(start),
                               "duplicate-member")
        bad = [m for m in members if m in _RESERVED]
        if bad:
            raise _SyntaxError(f"{bad[0]!r} cannot be an enumeration member",
                               cur.span_from(start))
        return EnumKind(members)
    if t.text == "vec3":
        unit = None
        if cur.accept("ident", "unit"):
            unit = cur.ident("unit name").text
        return Vec3Kind(unit)
    raise _SyntaxError(f"unknown input kind {t.text!r}", t.span, "unknown-kind")


# -- document assembly ------------------------------------------------------


@dataclass
class _RawCell:
    name: _Tok
    condition: Condition
    span: Span


@dataclass
class _RawBlock:
    output: str
    behavior: str
    description: str
    span: Span
    cells: list[_RawCell] = field(default_factory=list)
    transitions: list[TransitionRule] = field(default_factory=list)
    note: str = ""
    note_span: Span = Span(0, 0, 0, 0)
    damaged: bool = False  # a line of this block failed to parse


@dataclass
class ParseResult:
    document: Optional[CatDocument]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.document is not None

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]


class _Parser:
    def __init__(self, text: str, filename: Optional[str]):
        self.text = text
        self.filename = filename
        self.diags: list[Diagnostic] = []
        self.name: Optional[str] = None
        self.name_span = Span(1, 1, 1, 1)
        self.level: Optional[int] = None
        self.refines: Optional[Refines] = None
        self.aliases: list[tuple[str, str]] = []
        self.inputs: list[InputDecl] = []
        self.blocks: list[_RawBlock] = []
        self.seen_row = False
        self.broken_inputs: set[str] = set()

    def sorted_diags(self) -> list[Diagnostic]:
        return sorted(self.diags, key=lambda d: (d.span.line, d.span.col))

    def diag(self, d: Diagnostic) -> None:
        if self.filename and d.file is None:
            d = Diagnostic(d.severity, d.code, d.message, d.span, d.related, self.filename)
        self.diags.append(d)

    def run(self) -> ParseResult:
        block: Optional[_RawBlock] = None
        skipping = False  # inside the body of an unparseable or unknown top-level line
        for lineno, line in enumerate(self.text.splitlines(), start=1):
            try:
                toks = _tokenize(line, lineno)
            except _SyntaxError as e:
                self.diag(error(e.code, e.message, e.span))
                continue
            if not toks:
                continue
            indented = line[:1] in (" ", "\t")
            cur = _Cursor(toks, lineno, len(line))
            try:
                if indented:
                    if block is None:
                        if not skipping:
                            raise _SyntaxError("indented line outside a row", toks[0].span)
                        continue
                    self.row_line(block, cur)
                else:
                    block = None
                    skipping = False
                    block = self.top_line(cur)
            except _SkipBody:
                skipping = True
            except _SyntaxError as e:
                self.diag(error(e.code, e.message, e.span))
                if not indented:
                    skipping = True
                elif block is not None:
                    block.damaged = True
            except CatError as e:
                self.diag(error(e.code, e.message, toks[0].span))
        return self.finish()

    # top-level lines

    def top_line(self, cur: _Cursor) -> Optional[_RawBlock]:
        kw = cur.peek()
        if kw.kind != "ident" or kw.text not in _KEYWORDS:
            if kw.kind == "ident":
                self.diag(warning("unknown-keyword",
                                  f"unknown keyword {kw.text!r}; line ignored", kw.span))
                raise _SkipBody
            raise _SyntaxError(f"expected a declaration, found {kw.text!r}", kw.span)
        cur.next()
        if kw.text != "cat" and self.name is None:
            raise _SyntaxError("file must start with: cat \"<name>\"", kw.span, "missing-header")
        if kw.text == "cat":
            if self.name is not None:
                raise _SyntaxError("duplicate 'cat' header", kw.span)
            s = cur.expect("string", what="table name string")
            cur.end()
            self.name = _unquote(s.text)
            self.name_span = cur.span_from(kw)
        elif kw.text == "level":
            if self.level is not None:
                raise _SyntaxError("duplicate 'level' line", kw.span)
            t = cur.next("level number")
            if t.kind != "num" or not t.text.isdigit():
                raise _SyntaxError("level must be a non-negative integer", t.span, "bad-level")
            cur.end()
            self.level = int(t.text)
        elif kw.text == "refines":
            if self.inputs or self.seen_row or self.refines is not None:
                raise _SyntaxError("'refines' belongs in the header", kw.span)
            doc = cur.expect("string", what="parent table name")
            cur.expect("ident", "behavior")
            beh = cur.ident("behavior name")
            cur.end()
            span = cur.span_from(kw)
            self.refines = Refines(_unquote(doc.text), beh.text, span)
            if self.level == 0:
                self.diag(error("refines-on-root", "a level 0 table cannot refine another", span))
        elif kw.text == "alias":
            if self.inputs or self.seen_row:
                raise _SyntaxError("'alias' belongs in the header", kw.span)
            child = cur.ident("output name")
            cur.expect("punct", "=")
            parent = cur.ident("parent output name")
            cur.end()
            self.aliases.append((child.text, parent.text))
        elif kw.text == "input":
            if self.seen_row:
                raise _SyntaxError("inputs must be declared before rows", kw.span)
            self.check_header(kw)
            name = cur.ident("input name")
            if name.text in _RESERVED or name.text in AXES:
                raise _SyntaxError(f"{name.text!r} is reserved", name.span)
            try:
                cur.expect("punct", ":")
                kind = _kind(cur)
                cur.end()
            except _SyntaxError:
                self.broken_inputs.add(name.text)
                raise
            span = cur.span_from(kw)
            if any(d.name == name.text for d in self.inputs):
                self.diag(error("duplicate-input", f"input {name.text} declared twice", name.span))
                return None
            self.inputs.append(InputDecl(name.text, kind, span))
        else:  # row
            self.check_header(kw)
            self.seen_row = True
            out = cur.ident("output name")
            cur.expect("punct", ":")
            beh = cur.ident("behavior name")
            desc = cur.accept("string")
            cur.end()
            block = _RawBlock(out.text, beh.text, _unquote(desc.text) if desc else "",
                              cur.span_from(kw))
            self.blocks.append(block)
            return block
        return None

    def check_header(self, kw: _Tok) -> None:
        if self.level is None:
            self.level = 0
            self.diag(error("missing-header", "missing 'level' line before declarations", kw.span))

    # lines inside a row block

    def row_line(self, block: _RawBlock, cur: _Cursor) -> None:
        first = cur.peek()
        if cur.accept("arrow"):
            t = cur.next("transition target")
            if t.kind == "exit":
                target = EXIT
            elif t.kind == "ident":
                target = t.text
            else:
                raise _SyntaxError(f"expected a behavior name, found {t.text!r}", t.span)
            cur.expect("ident", "when")
            guard = _guard(cur)
            cur.end()
            block.transitions.append(TransitionRule(target, guard, cur.span_from(first)))
            return
        if first.kind == "ident" and first.text == "note" and cur.is_ident_string():
            cur.next()
            s = cur.expect("string")
            cur.end()
            if block.note:
                raise _SyntaxError("a sub-row has at most one note", first.span)
            block.note = _unquote(s.text)
            block.note_span = cur.span_from(first)
            return
        name = cur.ident("input name")
        if not cur.is_("punct", ":"):
            self.diag(warning("unknown-keyword",
                              f"unknown keyword {name.text!r}; line ignored", name.span))
            return
        cur.next()
        cond = _condition(cur)
        cur.end()
        if any(c.name.text == name.text for c in block.cells):
            raise _SyntaxError(f"second cell for {name.text} in one sub-row", name.span,
                               "duplicate-cell")
        block.cells.append(_RawCell(name, cond, cur.span_from(first)))

    # final checks

    def finish(self) -> ParseResult:
        if self.name is None:
            if not any(d.is_error for d in self.diags):
                self.diag(error("missing-header", "file must start with: cat \"<name>\"",
                                Span(1, 1, 1, 2)))
            return ParseResult(None, self.sorted_diags())
        if self.level is None:
            self.diag(error("missing-header", "missing 'level' line", self.name_span))
            self.level = 0

        rows: dict[str, list[tuple[_RawBlock, SubRow]]] = {}
        for b in self.blocks:
            if not b.cells:
                if b.damaged:
                    continue
                self.diag(error("empty-subrow",
                                f"sub-row {b.output} : {b.behavior} constrains no input", b.span))
                continue
            try:
                sub = SubRow(b.behavior,
                             tuple(sorted((Cell(c.name.text, c.condition, c.span) for c in b.cells),
                                          key=lambda c: self._column(c.input))),
                             tuple(b.transitions), b.note, b.span, b.note_span)
            except CatError as e:
                self.diag(error(e.code, e.message, b.span))
                continue
            rows.setdefault(b.output, []).append((b, sub))

        out_rows = []
        for output, parts in rows.items():
            desc = next((b.description for b, _ in parts if b.description), "")
            out_rows.append(OutputRow(output, tuple(s for _, s in parts), desc))

        doc = CatDocument.unchecked(name=self.name, level=self.level, refines=self.refines,
                                    inputs=tuple(self.inputs), rows=tuple(out_rows),
                                    aliases=tuple(self.aliases), span=self.name_span)
        reported = {(d.code, d.span) for d in self.diags}
        broken = {f"input {n} is not declared" for n in self.broken_inputs}
        for d in structural_problems(doc) + dangling_transitions(doc):
            if d.code == "unknown-input" and d.message in broken:
                continue  # the declaration itself already failed
            if (d.code, d.span) not in reported:
                self.diag(d)
        if any(d.is_error for d in self.diags):
            return ParseResult(None, self.sorted_diags())
        try:
            doc = CatDocument(name=self.name, level=self.level, refines=self.refines,
                              inputs=tuple(self.inputs), rows=tuple(out_rows),
                              aliases=tuple(self.aliases), span=self.name_span)
        except CatError as e:  # pragma: no cover - structural_problems already ran
            self.diag(error(e.code, e.message, e.span))
            return ParseResult(None, self.sorted_diags())
        return ParseResult(doc, self.sorted_diags())

    def _column(self, name: str) -> int:
        for i, d in enumerate(self.inputs):
            if d.name == name:
                return i
        return len(self.inputs)


class _SkipBody(_SyntaxError):
    def __init__(self):
        super().__init__("", Span(0, 0, 0, 0))


def parse(text: str, filename: Optional[str] = None) -> ParseResult:
    """Parse ``.cat`` source.  Never raises; problems come back as diagnostics."""
    p = _Parser(text, filename)
    try:
        return p.run()
    except _SkipBody:  # pragma: no cover - handled per line
        return ParseResult(None, p.diags)


def parse_file(path) -> ParseResult:
    from pathlib import Path

    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), str(path))


def parse_input_decl(name: str, kind_text: str) -> InputDecl:
    """Build a declaration from the text after ``input NAME :``."""
    line = f"{name} : {kind_text}"
    try:
        cur = _Cursor(_tokenize(line, 1), 1, len(line))
        t = cur.ident("input name")
        if t.text in _KEYWORDS or t.text in _RESERVED:
            raise _SyntaxError(f"{t.text!r} is reserved", t.span)
        cur.expect("punct", ":")
        kind = _kind(cur)
        cur.end()
    except _SyntaxError as e:
        raise CatError(e.code, e.message, e.span) from None
    return InputDecl(t.text, kind, NO_SPAN)


# -- rendering --------------------------------------------------------------


def render(doc: CatDocument) -> str:
    """Canonical source text for ``doc``.

    Rows come out grouped by output (first-appearance order), one ``row``
    block per sub-row, cells in column order.  Comments are not preserved.
    """
    lines = [f"cat {_quote(doc.name)}", f"level {doc.level}"]
    if doc.refines is not None:
        lines.append(f"refines {_quote(doc.refines.document)} behavior {doc.refines.behavior}")
    for child, parent in doc.aliases:
        lines.append(f"alias {child} = {parent}")
    if doc.inputs:
        lines.append("")
        for d in doc.inputs:
            lines.append(f"input {d.name} : {d.kind.render()}")
    order = {d.name: i for i, d in enumerate(doc.inputs)}
    for row in doc.rows:
        for i, sub in enumerate(row.subrows):
            lines.append("")
            head = f"row {row.output} : {sub.behavior}"
            if i == 0 and row.description:
                head += " " + _quote(row.description)
            lines.append(head)
            for c in sorted(sub.cells, key=lambda c: order.get(c.input, len(order))):
                lines.append(f"  {c.input} : {c.condition.render()}")
            for t in sub.transitions:
                lines.append(f"  {t.render()}")
            if sub.note:
                lines.append(f"  note {_quote(sub.note)}")
    return "\n".join(lines) + "\n"
