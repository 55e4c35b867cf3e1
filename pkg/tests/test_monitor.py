import io
import json
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from captables.corpus.sim import Fault, roomba_script, simulate
from captables.diagnose import BROKEN, CatHierarchy
from captables.model import CatError, Valuation, Vec3
from captables.monitor import (
    ILLEGAL,
    MISSING,
    UNDEFINED,
    UNEXPECTED,
    TraceRecord,
    derive_baseline_tests,
    read_trace,
    record_to_json,
    replay,
    write_trace,
)
from captables.parser import parse

from faults import KINDS, moving_roomba, place_faults, roomba, without_subrow

D = Decimal


@pytest.fixture(scope="module")
def conformant(roomba):
    return simulate(roomba_script(1000), roomba)


def test_conformant_trace_is_clean(hierarchy, conformant):
    assert len(conformant) == 1000
    assert replay(hierarchy, "roomba-core", conformant) == []


def test_unlabelled_trace_is_tracked_by_the_table(hierarchy, roomba):
    trace = simulate(roomba_script(1000, label_behavior=False), roomba)
    assert all(r.observed_behavior is None for r in trace)
    assert replay(hierarchy, "roomba-core", trace) == []


def test_deleting_wheels_move_three_times(hierarchy, conformant):
    drive = [r.t for r in conformant if "wheelsMove" in r.observed_outputs]
    picked = set(drive[10:13])
    trace = [TraceRecord(r.t, r.inputs, r.observed_outputs - {"wheelsMove"}, r.observed_behavior)
             if r.t in picked else r for r in conformant]
    events = replay(hierarchy, "roomba-core", trace)
    assert [(e.t, e.kind, e.output) for e in events] == [(t, MISSING, "wheelsMove")
                                                          for t in sorted(picked)]
    # the core table's conditions hold, so diagnosis wants the drive table's inputs
    assert all(e.diagnosis is None and e.diagnosis_error == "missing-child-values"
               for e in events)


def test_missing_output_diagnosis_descends_with_child_inputs(hierarchy, conformant):
    drive_inputs = {"bumpDetect": False, "cliff": False, "wheelDrop": False, "wallDistance": 30}
    r = next(r for r in conformant if "wheelsMove" in r.observed_outputs)
    rec = TraceRecord(r.t, {**r.inputs, **drive_inputs}, frozenset(), "Drive")
    (e,) = replay(hierarchy, "roomba-core", [rec])
    assert e.kind == MISSING and e.diagnosis is not None
    assert e.diagnosis.path[:2] == (("roomba-core", "Drive"), ("roomba-drive", "Forward"))


def test_unlicensed_jump_is_illegal(hierarchy, roomba):
    base = {"batteryLevel": 50, "warningLight": False, "cleaningType": "spot",
            "velocity": 0, "changeInState": False}
    trace = [
        TraceRecord(0, base, frozenset({"increasePower"}), "Charging"),
        TraceRecord(1, base, frozenset({"pickUpDirt"}), "Clean"),
    ]
    events = replay(hierarchy, "roomba-core", trace)
    assert [(e.t, e.kind) for e in events] == [(1, ILLEGAL)]
    assert "Charging -> Clean" in events[0].detail


def test_licensed_jump_is_fine(hierarchy):
    base = {"batteryLevel": 96, "warningLight": False, "cleaningType": "spot",
            "velocity": 0, "changeInState": True}
    trace = [
        TraceRecord(0, base, frozenset({"increasePower"}), "Charging"),
        TraceRecord(1, {**base, "changeInState": False}, frozenset({"stopWheels"}), "Drive"),
    ]
    assert replay(hierarchy, "roomba-core", trace) == []


def test_unexpected_output(hierarchy):
    base = {"batteryLevel": 50, "warningLight": True, "cleaningType": "spot",
            "velocity": 0, "changeInState": False}
    events = replay(hierarchy, "roomba-core",
                    [TraceRecord(D("0.5"), base, frozenset({"stopWheels", "map"}), "Drive")])
    assert [(e.kind, e.output) for e in events] == [(UNEXPECTED, "map")]


def test_undefined_response_is_reported():
    src = ('cat "gap"\nlevel 0\ninput a : bool\n\nrow o : Run\n  a : == true\n')
    h = CatHierarchy([parse(src).document])
    events = replay(h, "gap", [TraceRecord(0, {"a": False})])
    assert [e.kind for e in events] == [UNDEFINED]


def test_replay_errors(hierarchy, conformant):
    with pytest.raises(CatError) as e:
        replay(hierarchy, "roomba-core", [conformant[5], conformant[4]])
    assert e.value.code == "nonmonotone-time"
    r = conformant[0]
    missing = {k: v for k, v in r.inputs.items() if k != "velocity"}
    for bad in (missing, {**r.inputs, "velocity": 9}, {**r.inputs, "sonar": 1},
                {**r.inputs, "warningLight": "maybe"}):
        with pytest.raises(CatError) as e:
            replay(hierarchy, "roomba-core", [TraceRecord(0, bad, frozenset(), "Drive")])
        assert e.value.code == "schema-mismatch"
    with pytest.raises(CatError) as e:
        replay(hierarchy, "roomba-core", [TraceRecord(0, r.inputs, frozenset(), "Fly")])
    assert e.value.code == "schema-mismatch"


def test_child_inputs_may_ride_along(hierarchy, conformant):
    r = conformant[0]
    extra = TraceRecord(0, {**r.inputs, "bumpDetect": True}, r.observed_outputs, r.observed_behavior)
    assert replay(hierarchy, "roomba-core", [extra]) == []


def test_equal_timestamps_are_allowed(hierarchy, conformant):
    a, b = conformant[0], conformant[1]
    b = TraceRecord(a.t, b.inputs, b.observed_outputs, b.observed_behavior)
    replay(hierarchy, "roomba-core", [a, b])


def test_jsonl_round_trip(conformant):
    buf = io.StringIO()
    write_trace(conformant[:50], buf)
    buf.seek(0)
    back = read_trace(buf)
    assert back == conformant[:50] or [record_to_json(r) for r in back] == \
        [record_to_json(r) for r in conformant[:50]]
    first = json.loads(buf.getvalue().splitlines()[0])
    assert set(first) == {"t", "inputs", "outputs", "behavior"}


def test_jsonl_reads_decimals_and_vectors(hierarchy):
    line = ('{"t": 0.1, "inputs": {"pose": {"x": 0, "y": 0.25, "z": 1.5}, "battery": 80.5},'
            ' "outputs": ["robotOn"]}\n')
    (r,) = read_trace([line, "\n"])
    assert r.t == D("0.1")
    assert r.inputs["battery"] == D("80.5")
    assert r.inputs["pose"] == {"x": 0, "y": D("0.25"), "z": D("1.5")}
    assert r.observed_behavior is None
    assert record_to_json(TraceRecord(1, {"pose": Vec3(D(0), D("0.5"), D(2))}))["inputs"] == {
        "pose": {"x": 0, "y": 0.5, "z": 2}}
    with pytest.raises(CatError):
        read_trace(["{not json\n"])
    with pytest.raises(CatError):
        read_trace(['{"inputs": {}}\n'])


def test_violation_json_is_plain(hierarchy, conformant):
    trace = list(conformant[:30])
    trace[20] = TraceRecord(20, trace[20].inputs, frozenset(), trace[20].observed_behavior)
    events = replay(hierarchy, "roomba-core", trace)
    assert events
    for e in events:
        json.loads(json.dumps(e.to_json()))
        assert e.format().startswith("t=20 ")


# -- fault injection ----------------------------------------------------------------


@pytest.mark.parametrize("kind", [MISSING, UNEXPECTED, ILLEGAL])
@pytest.mark.parametrize("k", [1, 3])
def test_injected_faults_are_found_exactly(hierarchy, roomba, kind, k):
    trace, steps = place_faults(roomba, roomba_faults, kind, k)
    events = replay(hierarchy, "roomba-core", trace)
    assert [(e.t, e.kind) for e in events] == [(s, kind) for s in sorted(steps)]


def roomba_faults(faults):
    return roomba(faults)


def test_undefined_response_injection_on_a_table_with_a_gap(roomba):
    gap = without_subrow(roomba, "stopWheels", 1)
    h = CatHierarchy([gap])
    assert replay(h, "roomba-core", simulate(moving_roomba(), gap)) == []
    trace, steps = place_faults(gap, moving_roomba, UNDEFINED, 3)
    events = replay(h, "roomba-core", trace)
    assert [(e.t, e.kind) for e in events] == [(s, UNDEFINED) for s in steps]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([MISSING, UNEXPECTED, ILLEGAL]),
       st.lists(st.integers(1, 199), min_size=1, max_size=4, unique=True))
def test_injection_exactness_property(hierarchy, roomba, kind, steps):
    from captables.model import CatError as Err

    faults = [Fault(s, kind, {"output": "map"} if kind == UNEXPECTED else {}) for s in steps]
    try:
        trace = simulate(roomba_script(200, faults), roomba)
    except Err as e:
        assert e.code == "bad-script"
        return
    events = replay(hierarchy, "roomba-core", trace)
    assert [(e.t, e.kind) for e in events] == [(s, kind) for s in sorted(steps)]


# -- baseline tests -----------------------------------------------------------------


def test_roomba_baseline_tests_match_the_stated_expectations(roomba):
    tests = derive_baseline_tests(roomba)
    assert len(tests) == sum(1 for _ in roomba.subrows())
    charging = [t for t in tests if t.behavior == "Charging" and "increasePower" in t.expected_outputs]
    assert charging and all("wheelsMove" in t.forbidden_outputs for t in charging)
    drive = [t for t in tests if "wheelsMove" in t.expected_outputs]
    assert drive and all(t.valuation.values["warningLight"] is False for t in drive)
    clean = [t for t in tests if "pickUpDirt" in t.expected_outputs]
    assert clean and all(t.valuation.values["warningLight"] is False for t in clean)


def test_baseline_tests_replay_clean(hierarchy, corpus):
    for name in ("roomba-core", "roomba-slam", "pelican-core"):
        for t in derive_baseline_tests(corpus[name]):
            rec = TraceRecord(0, dict(t.valuation.values), t.expected_outputs, t.behavior)
            assert replay(hierarchy, name, [rec]) == []
            assert not (t.expected_outputs & t.forbidden_outputs)


def test_one_unconditional_row_gives_one_test():
    d = parse('cat "u"\nlevel 0\ninput a : bool\n\nrow on : Run\n  a : any\n').document
    (t,) = derive_baseline_tests(d)
    assert t.expected_outputs == {"on"} and t.forbidden_outputs == frozenset()
    assert t.valuation == Valuation({"a": False}, "Run")


def test_unsatisfiable_subrow():
    d = parse('cat "u"\nlevel 0\ninput n : number domain [0, 10]\n\nrow on : Run\n  n : > 20\n').document
    with pytest.raises(CatError) as e:
        derive_baseline_tests(d)
    assert e.value.code == "unsatisfiable-subrow"


def test_baseline_json(roomba):
    for t in derive_baseline_tests(roomba):
        j = json.loads(json.dumps(t.to_json()))
        assert j["behavior"] == t.behavior
        assert t.format().startswith(t.behavior)
