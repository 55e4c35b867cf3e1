from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from captables.analysis import (
    add_input_column,
    check_refinement,
    condition_satisfiable,
    coverage,
    discretization,
    probe_grid,
    relevant_inputs,
    validate,
)
from captables.corpus import CORPUS_IDS
from captables.logic import evaluate
from captables.model import (
    BoolKind,
    CatDocument,
    CatError,
    Cell,
    Compare,
    Condition,
    InputDecl,
    NumberKind,
    OutputRow,
    Refines,
    SubRow,
    Valuation,
    Vec3,
    behavior_set,
    table_stats,
)
from captables.parser import parse, render

from docgen import random_document, sample_value

D = Decimal
HEAD = 'cat "t"\nlevel 0\ninput battery : number domain [0, 100]\ninput light : bool\n'


def doc(body, head=HEAD):
    r = parse(head + body)
    assert r.ok, [d.format() for d in r.diagnostics]
    return r.document


def codes(diags):
    return [d.code for d in diags]


# -- validate -------------------------------------------------------------------


def test_corpus_has_no_validation_errors(corpus):
    for d in corpus.values():
        assert not [x for x in validate(d) if x.is_error], d.name


def test_roomba_core_is_clean(roomba):
    assert validate(roomba) == []


def test_dangling_transition_on_unchecked_document():
    good = doc("\nrow go : Drive\n  light : == false\n")
    sub = good.rows[0].subrows[0]
    from captables.model import GuardAtom, TransitionRule

    bad_sub = SubRow(sub.behavior, sub.cells, (TransitionRule("Flying", GuardAtom("light", "==", True)),))
    bad = CatDocument(good.name, inputs=good.inputs, rows=(OutputRow("go", (bad_sub,)),))
    assert codes(validate(bad)).count("dangling-transition") == 1


def test_unreachable_behavior():
    d = doc("\nrow a : One\n  light : == false\n\nrow b : Two\n  light : == true\n")
    assert "unreachable-behavior" in codes(validate(d))
    d = doc("\nrow a : One\n  light : == false\n  -> Two when light == true\n"
            "\nrow b : Two\n  light : == true\n")
    assert "unreachable-behavior" not in codes(validate(d))


def test_self_loop_does_not_make_a_behavior_reachable():
    d = doc("\nrow a : One\n  light : == false\n"
            "\nrow b : Two\n  light : == true\n  -> Two when light == false\n")
    assert "unreachable-behavior" in codes(validate(d))


def test_duplicate_subrow_points_at_both():
    d = doc("\nrow a : One\n  light : == false\n\nrow a : One\n  light : == false\n")
    (dup,) = [x for x in validate(d) if x.code == "duplicate-subrow"]
    assert dup.span.line == 9
    assert dup.related[0][0].line == 6


def test_always_false_cell():
    d = doc("\nrow a : One\n  battery : > 200\n")
    (x,) = [x for x in validate(d) if x.code == "always-false-cell"]
    assert x.severity == "warning"
    d = doc("\nrow a : One\n  battery : > 50 & < 40\n")
    assert "always-false-cell" in codes(validate(d))
    d = doc("\nrow a : One\n  battery : >= 100 & <= 100\n")
    assert "always-false-cell" not in codes(validate(d))


def test_always_false_on_enum_and_vector():
    head = 'cat "t"\nlevel 0\ninput m : enum {p, q}\ninput v : vec3\n'
    d = doc("\nrow a : One\n  m : == p & != p\n", head)
    assert "always-false-cell" in codes(validate(d))
    d = doc("\nrow a : One\n  v : z > 1 & z < 1\n", head)
    assert "always-false-cell" in codes(validate(d))
    d = doc("\nrow a : One\n  v : z > 1 & x < 1\n", head)
    assert "always-false-cell" not in codes(validate(d))


def test_unused_input_is_info():
    d = doc("\nrow a : One\n  light : == false\n")
    (x,) = [x for x in validate(d) if x.code == "unused-input"]
    assert x.severity == "info"


def test_nondeterministic_transition_warning():
    d = doc("\nrow a : One\n  light : == false\n  -> Two when battery < 50\n"
            "  -> Three when battery > 40\n"
            "\nrow b : Two\n  light : == true\n  -> One when battery > 1\n"
            "\nrow c : Three\n  light : == true\n  -> One when battery > 1\n")
    (x,) = [x for x in validate(d) if x.code == "nondeterministic-transition"]
    assert x.span.line == 9
    assert x.related[0][0].line == 8
    d = doc("\nrow a : One\n  light : == false\n  -> Two when battery < 40\n"
            "  -> Three when battery > 40\n"
            "\nrow b : Two\n  light : == true\n  -> One when battery > 1\n"
            "\nrow c : Three\n  light : == true\n  -> One when battery > 1\n")
    assert "nondeterministic-transition" not in codes(validate(d))


def test_validate_is_stable(corpus):
    for d in corpus.values():
        assert validate(d) == validate(d)


def test_condition_satisfiable():
    decl = InputDecl("b", NumberKind(D(0), D(10)))
    assert condition_satisfiable(decl, Condition((Compare(">=", D(10)),)))
    assert not condition_satisfiable(decl, Condition((Compare(">", D(10)),)))
    assert not condition_satisfiable(decl, Condition((Compare("==", D(3)), Compare("!=", D(3)))))
    flag = InputDecl("f", BoolKind())
    assert not condition_satisfiable(flag, Condition((Compare("==", True), Compare("==", False))))


# -- discretization and coverage ------------------------------------------------


def test_probes_use_written_precision():
    d = doc("\nrow a : One\n  battery : > 20.5\n  light : == false\n")
    probes = discretization(d)
    assert probes["battery"] == [D(0), D("20.4"), D("20.5"), D("20.6"), D(100)]
    assert probes["light"] == [False, True]


def test_probes_are_clipped_to_the_domain():
    d = doc("\nrow a : One\n  battery : < 100\n")
    assert discretization(d)["battery"] == [D(0), D(99), D(100)]


def test_vector_probes_are_a_product_per_axis():
    d = doc("\nrow a : One\n  v : z > 0\n", 'cat "t"\nlevel 0\ninput v : vec3\n')
    probes = discretization(d)["v"]
    assert len(probes) == 3
    assert Vec3(D(0), D(0), D(1)) in probes


def test_unbounded_input_is_refused():
    from captables.model import InputDecl as Decl

    d = CatDocument("t", inputs=(Decl("n", NumberKind()),),
                    rows=(OutputRow("o", (SubRow("A", (Cell("n", Condition((Compare(">", D(1)),))),)),)),))
    with pytest.raises(CatError) as e:
        coverage(d)
    assert e.value.code == "unbounded-input"


def test_roomba_core_is_total(roomba):
    report = coverage(roomba)
    assert report.total
    assert report.enumerated_count > 0


def test_deleting_charging_row_leaves_witnesses(roomba):
    rows = tuple(r for r in roomba.rows if r.output != "chargeComplete")
    mutated = CatDocument(roomba.name, inputs=roomba.inputs, rows=rows)
    report = coverage(mutated)
    assert report.witnesses_for("Charging")
    for w in report.uncovered:
        assert evaluate(mutated, w).undefined_response


def test_single_any_row_is_total():
    d = doc("\nrow a : One\n  light : any\n")
    assert coverage(d).total


def test_coverage_cap_is_reported():
    d = doc("\nrow a : One\n  battery : > 1 & < 99\n  light : == true\n")
    capped = coverage(d, max_cases=3)
    assert capped.truncated == ("One",)
    assert capped.enumerated_count == 3


def test_every_corpus_subrow_fires_somewhere_on_the_grid(corpus):
    for d in corpus.values():
        probes = discretization(d)
        for ref, sub in d.subrows():
            hit = any(ref in evaluate(d, v).fired_subrows
                      for v in probe_grid(d, sub.behavior, probes))
            assert hit, (d.name, str(ref))


def test_relevant_inputs(roomba):
    assert relevant_inputs(roomba, "Charging") == ["batteryLevel", "warningLight", "changeInState"]


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_coverage_witnesses_replay(rng):
    d = random_document(rng)
    report = coverage(d, max_cases=2000)
    for w in report.uncovered:
        assert evaluate(d, w).undefined_response


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_irrelevant_inputs_cannot_change_the_outcome(rng):
    d = random_document(rng)
    probes = discretization(d)
    for b in behavior_set(d):
        keep = set(relevant_inputs(d, b))
        for v in probe_grid(d, b, probes, limit=20):
            base = evaluate(d, v)
            for n in d.input_names:
                if n in keep:
                    continue
                for p in probes[n]:
                    other = evaluate(d, v.with_values(**{n: p}))
                    assert other.expected_outputs == base.expected_outputs
                    assert other.next_behavior == base.next_behavior


# -- refinement -----------------------------------------------------------------


def test_corpus_refinements_are_accepted(corpus):
    for child in ("roomba-clean", "roomba-drive", "pelican-fly"):
        c = corpus[child]
        rep = check_refinement(corpus[c.refines.document], c)
        assert rep.accepted, [v.format() for v in rep.violations]


def test_pelican_fly_inherits_pose_and_battery(corpus):
    rep = check_refinement(corpus["pelican-core"], corpus["pelican-fly"])
    assert {"pose", "battery"} <= set(rep.inherited_inputs)


CHILD_HEAD = 'cat "c"\nlevel 1\nrefines "t" behavior One\n'


def parent():
    return doc("\nrow a : One\n  battery : > 20\n")


def test_kind_drift():
    c = doc("\nrow x : X\n  battery : > 1\n",
            CHILD_HEAD + "input battery : number domain [0, 50]\n")
    rep = check_refinement(parent(), c)
    assert codes(rep.violations) == ["kind-drift"]
    assert "battery" not in rep.inherited_inputs


def test_orphan_input():
    inputs = (InputDecl("battery", NumberKind(D(0), D(100))),)
    sub = SubRow("X", (Cell("sonar", Condition((Compare(">", D(1)),))),))
    c = CatDocument.unchecked(name="c", level=1, refines=Refines("t", "One"), inputs=inputs,
                              rows=(OutputRow("x", (sub,)),))
    rep = check_refinement(parent(), c)
    assert codes(rep.violations) == ["orphan-input"]


def test_vacuous_decomposition():
    c = doc("\nrow x : X\n  battery : < 10\n",
            CHILD_HEAD + "input battery : number domain [0, 100]\n")
    rep = check_refinement(parent(), c)
    assert codes(rep.violations) == ["vacuous-decomposition"]


def test_open_transition():
    c = CatDocument.unchecked(
        name="c", level=1, refines=Refines("t", "One"),
        inputs=(InputDecl("battery", NumberKind(D(0), D(100))),),
        rows=parse(CHILD_HEAD + "input battery : number domain [0, 100]\n"
                   "\nrow x : X\n  battery : > 30\n  -> Y when battery < 50\n"
                   "\nrow y : Y\n  battery : > 30\n").document.rows[:1])
    rep = check_refinement(parent(), c)
    assert codes(rep.violations) == ["open-transition"]


def test_bad_link():
    c = doc("\nrow x : X\n  battery : > 30\n",
            'cat "c"\nlevel 1\nrefines "t" behavior Nope\ninput battery : number domain [0, 100]\n')
    with pytest.raises(CatError) as e:
        check_refinement(parent(), c)
    assert e.value.code == "bad-link"
    with pytest.raises(CatError):
        check_refinement(parent(), parent())


# -- add_input_column -------------------------------------------------------------


def test_add_input_keeps_counts(roomba):
    new = add_input_column(roomba, InputDecl("irSensor", BoolKind()))
    before, after = table_stats([roomba]), table_stats([new])
    assert (after.behaviors, after.outputs, after.pairs) == (before.behaviors, before.outputs, before.pairs)
    assert after.inputs == before.inputs + 1
    assert roomba.input("irSensor") is None
    assert parse(render(new)).document == new


def test_add_existing_input_fails(roomba):
    with pytest.raises(CatError) as e:
        add_input_column(roomba, InputDecl("velocity", BoolKind()))
    assert e.value.code == "duplicate-input"


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(["bool", "number", "enum"]))
def test_new_blank_column_never_changes_evaluation(rng, kind):
    from captables.model import EnumKind

    d = random_document(rng)
    k = {"bool": BoolKind(), "number": NumberKind(D(-5), D(5)), "enum": EnumKind(("u", "v"))}[kind]
    new = add_input_column(d, InputDecl("zzNew", k))
    probes = discretization(d)
    for b in behavior_set(d):
        for v in probe_grid(d, b, probes, limit=10):
            extended = Valuation({**v.values, "zzNew": sample_value(rng, k)}, b)
            a, c = evaluate(d, v), evaluate(new, extended)
            assert (a.expected_outputs, a.next_behavior) == (c.expected_outputs, c.next_behavior)


@pytest.mark.parametrize("eid", CORPUS_IDS)
def test_full_grid_is_at_least_a_thousand(eid, corpus):
    d = corpus[eid]
    probes = discretization(d)
    n = len(behavior_set(d))
    for name in d.input_names:
        n *= len(probes[name])
    assert n >= 1000
