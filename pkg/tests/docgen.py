"""Random valid documents, built from model objects with a seeded RNG."""

from decimal import Decimal

from captables.model import (
    EXIT,
    AnyClause,
    AxisCompare,
    BoolKind,
    CatDocument,
    Cell,
    Compare,
    Condition,
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
    SubRow,
    TransitionRule,
    Vec3,
)

CMP = ("<", "<=", ">", ">=", "==", "!=")
EQ = ("==", "!=")
TEXT_CHARS = 'abc XYZ 019 "\\ -_.'


def _name(rng, prefix):
    return prefix + "".join(rng.choice("abcdefgh") for _ in range(rng.randint(0, 3)))


def _names(rng, prefix, n):
    out = []
    while len(out) < n:
        cand = f"{_name(rng, prefix)}{len(out)}"
        out.append(cand)
    return out


def _number(rng, lo=-50, hi=50):
    whole = rng.randint(lo, hi)
    places = rng.choice((0, 0, 1, 2))
    if places == 0:
        return Decimal(whole)
    frac = rng.randint(0, 10 ** places - 1)
    sign = "-" if whole < 0 else ""
    return Decimal(f"{sign}{abs(whole)}.{frac:0{places}d}")


def _text(rng):
    return "".join(rng.choice(TEXT_CHARS) for _ in range(rng.randint(0, 12)))


def _kind(rng):
    pick = rng.choice(("bool", "number", "enum", "vec3"))
    if pick == "bool":
        return BoolKind()
    if pick == "number":
        a, b = sorted((_number(rng), _number(rng)))
        return NumberKind(a, b, rng.choice((None, "m", "percent")))
    if pick == "enum":
        return EnumKind(tuple(_names(rng, "m", rng.randint(1, 4))))
    return Vec3Kind_(rng)


def Vec3Kind_(rng):
    from captables.model import Vec3Kind

    return Vec3Kind(rng.choice((None, "m", "mps")))


def _clause(rng, kind):
    if isinstance(kind, BoolKind):
        return Compare(rng.choice(EQ), rng.choice((True, False)))
    if isinstance(kind, NumberKind):
        if rng.random() < 0.3:
            a, b = sorted((_number(rng), _number(rng)))
            return Range(a, b)
        return Compare(rng.choice(CMP), _number(rng))
    if isinstance(kind, EnumKind):
        if rng.random() < 0.4:
            k = rng.randint(1, len(kind.members))
            return Membership(tuple(rng.sample(kind.members, k)))
        return Compare(rng.choice(EQ), rng.choice(kind.members))
    return AxisCompare(rng.choice("xyz"), rng.choice(CMP), _number(rng))


def _condition(rng, kind):
    if rng.random() < 0.1:
        return Condition((AnyClause(),))
    return Condition(tuple(_clause(rng, kind) for _ in range(rng.randint(1, 2))))


def _guard_atom(rng, decl):
    k = decl.kind
    if isinstance(k, BoolKind):
        return GuardAtom(decl.name, rng.choice(EQ), rng.choice((True, False)))
    if isinstance(k, NumberKind):
        return GuardAtom(decl.name, rng.choice(CMP), _number(rng))
    if isinstance(k, EnumKind):
        return GuardAtom(decl.name, rng.choice(EQ), rng.choice(k.members))
    return GuardAtom(decl.name, rng.choice(CMP), _number(rng), rng.choice("xyz"))


def _guard(rng, inputs, depth=0):
    if depth >= 2 or rng.random() < 0.5:
        return _guard_atom(rng, rng.choice(inputs))
    cls = rng.choice((GuardAnd, GuardOr))
    return cls(tuple(_guard(rng, inputs, depth + 1) for _ in range(rng.randint(2, 3))))


def random_document(rng) -> CatDocument:
    inputs = tuple(InputDecl(n, _kind(rng)) for n in _names(rng, "in", rng.randint(1, 5)))
    behaviors = _names(rng, "B", rng.randint(1, 4))
    outputs = _names(rng, "out", rng.randint(1, 4))
    level = rng.choice((0, 0, 1, 2))
    refines = Refines(_name(rng, "parent"), rng.choice(("Fly", "Drive"))) if level else None
    skeleton = []
    for out in outputs:
        subs = []
        for _ in range(rng.randint(1, 3)):
            chosen = sorted(rng.sample(range(len(inputs)), rng.randint(1, len(inputs))))
            cells = tuple(Cell(inputs[i].name, _condition(rng, inputs[i].kind)) for i in chosen)
            note = _text(rng) if rng.random() < 0.4 else ""
            subs.append((rng.choice(behaviors), cells, note))
        skeleton.append((out, subs, _text(rng) if rng.random() < 0.5 else ""))
    used = sorted({b for _, subs, _ in skeleton for b, _, _ in subs})
    targets = used + ([EXIT] if level else [])
    rows = []
    for out, subs, desc in skeleton:
        built = []
        for behavior, cells, note in subs:
            rules = tuple(TransitionRule(rng.choice(targets), _guard(rng, inputs))
                          for _ in range(rng.choice((0, 0, 1, 2))))
            built.append(SubRow(behavior, cells, rules, note))
        rows.append(OutputRow(out, tuple(built), desc))
    aliases = ()
    if level and rng.random() < 0.5:
        aliases = ((outputs[0], _name(rng, "parentOut")),)
    return CatDocument(_text(rng) or "doc", level, refines, inputs, tuple(rows), aliases)


def sample_value(rng, kind):
    """A legal value for ``kind`` (used by blank-cell and evaluation properties)."""
    if isinstance(kind, BoolKind):
        return rng.choice((True, False))
    if isinstance(kind, NumberKind):
        return rng.choice((kind.lo, kind.hi, (kind.lo + kind.hi) / 2))
    if isinstance(kind, EnumKind):
        return rng.choice(kind.members)
    return Vec3(*(_number(rng) for _ in range(3)))
