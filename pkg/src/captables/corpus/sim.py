"""A scripted, deterministic trace generator used as a monitoring fixture.

The "physics" is bookkeeping only: inputs follow schedules, the behavior
follows the table, and outputs are exactly what the table promises.  Faults
are then written over individual records.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Mapping, NamedTuple, Optional, Sequence, Union

from ..logic import evaluate, firing_transitions
from ..model import (
    EXIT,
    CatDocument,
    CatError,
    Valuation,
    behavior_set,
    coerce_value,
    to_decimal,
)
from ..monitor import ILLEGAL, MISSING, UNDEFINED, UNEXPECTED, TraceRecord

__all__ = [
    "Constant",
    "Steps",
    "Cycle",
    "Pulse",
    "Battery",
    "Fault",
    "SimScript",
    "simulate",
    "roomba_script",
]

FAULT_KINDS = (MISSING, UNEXPECTED, UNDEFINED, ILLEGAL)


@dataclass(frozen=True)
class Constant:
    value: object

    def value_at(self, step, behavior, prev):
        return self.value


@dataclass(frozen=True)
class Steps:
    """Piecewise constant: each (start, value) holds until the next start."""

    points: tuple

    def __post_init__(self):
        starts = [s for s, _ in self.points]
        if not starts or starts[0] != 0 or starts != sorted(set(starts)):
            raise CatError("bad-script", "step schedule must start at 0 with increasing starts")

    def value_at(self, step, behavior, prev):
        current = self.points[0][1]
        for start, value in self.points:
            if start > step:
                break
            current = value
        return current


@dataclass(frozen=True)
class Cycle:
    """Round-robin over ``values``, each held for ``period`` steps."""

    values: tuple
    period: int = 1

    def __post_init__(self):
        if not self.values or self.period < 1:
            raise CatError("bad-script", "cycle needs values and a positive period")

    def value_at(self, step, behavior, prev):
        return self.values[(step // self.period) % len(self.values)]


@dataclass(frozen=True)
class Pulse:
    """``on`` for ``width`` steps out of every ``period``, starting at ``phase``."""

    period: int
    width: int = 1
    phase: int = 0
    on: object = True
    off: object = False

    def value_at(self, step, behavior, prev):
        return self.on if (step - self.phase) % self.period < self.width else self.off


@dataclass(frozen=True)
class Battery:
    """Charge counter: drains while in a drain behavior, charges in a charge behavior."""

    start: Decimal = Decimal(100)
    drain: Decimal = Decimal("0.5")
    charge: Decimal = Decimal(2)
    drain_in: tuple = ("Drive", "Clean")
    charge_in: tuple = ("Charging",)
    lo: Decimal = Decimal(0)
    hi: Decimal = Decimal(100)

    def value_at(self, step, behavior, prev):
        if prev is None:
            return self.start
        level = to_decimal(prev)
        if behavior in self.drain_in:
            level -= to_decimal(self.drain)
        elif behavior in self.charge_in:
            level += to_decimal(self.charge)
        return min(max(level, to_decimal(self.lo)), to_decimal(self.hi))


Profile = Union[Constant, Steps, Cycle, Pulse, Battery]


class Fault(NamedTuple):
    """An edit written over the record at ``step``.

    * missing-output: drop ``edit["output"]`` (default: the first expected output)
    * unexpected-output: add ``edit["output"]``
    * undefined-response: replace inputs with ``edit["inputs"]``, which must leave
      the table with no answer, and clear outputs
    * illegal-transition: relabel the record with ``edit["behavior"]`` (default:
      the first behavior no rule licenses) and continue from there
    """

    step: int
    kind: str
    edit: Mapping = {}


@dataclass(frozen=True)
class SimScript:
    duration: int
    input_profiles: Mapping[str, Profile]
    fault_injections: Sequence[Fault] = ()
    initial_behavior: Optional[str] = None
    label_behavior: bool = True


def _check_script(script: SimScript, doc: CatDocument) -> None:
    if script.duration < 0:
        raise CatError("bad-script", "duration must be non-negative")
    names = set(doc.input_names)
    missing = sorted(names - set(script.input_profiles))
    extra = sorted(set(script.input_profiles) - names)
    if missing:
        raise CatError("bad-script", "no schedule for " + ", ".join(missing))
    if extra:
        raise CatError("bad-script", "schedules for undeclared inputs " + ", ".join(extra))
    steps = set()
    for f in script.fault_injections:
        if f.kind not in FAULT_KINDS:
            raise CatError("bad-script", f"unknown fault kind {f.kind}")
        if not 0 <= f.step < script.duration:
            raise CatError("bad-script", f"fault at step {f.step} is outside 0..{script.duration - 1}")
        if f.step in steps:
            raise CatError("bad-script", f"two faults at step {f.step}")
        steps.add(f.step)
    if script.initial_behavior is not None and script.initial_behavior not in behavior_set(doc):
        raise CatError("bad-script", f"{script.initial_behavior} is not a behavior of {doc.name}")


def _inputs(doc: CatDocument, raw: Mapping) -> dict:
    values = {}
    for decl in doc.inputs:
        try:
            value = coerce_value(decl, raw[decl.name])
        except CatError as e:
            raise CatError("bad-script", e.message) from None
        problem = decl.check_value(value)
        if problem:
            raise CatError("bad-script", f"{decl.name}: {problem}")
        values[decl.name] = value
    return values


def simulate(script: SimScript, doc: CatDocument) -> list[TraceRecord]:
    """Run ``script`` against ``doc``; deterministic for a given script."""
    _check_script(script, doc)
    faults = {f.step: f for f in script.fault_injections}
    behavior = script.initial_behavior or doc.initial_behavior
    raw_prev: dict = {}
    prev: Optional[Valuation] = None
    trace = []
    for step in range(script.duration):
        raw = {name: p.value_at(step, behavior, raw_prev.get(name))
               for name, p in script.input_profiles.items()}
        raw_prev = raw
        values = _inputs(doc, raw)
        fault = faults.get(step)
        if fault is not None and fault.kind == ILLEGAL:
            behavior = _illegal_target(doc, prev, behavior, fault)
        if fault is not None and fault.kind == UNDEFINED:
            values = _inputs(doc, {**raw, **fault.edit.get("inputs", {})})
        v = Valuation(values, behavior)
        outcome = evaluate(doc, v)
        outputs = set(outcome.expected_outputs)
        if fault is not None:
            if fault.kind == MISSING:
                out = fault.edit.get("output") or min(outputs, default=None)
                if out not in outputs:
                    raise CatError("bad-script", f"step {step}: {out} is not expected, "
                                   "so it cannot go missing")
                outputs.discard(out)
            elif fault.kind == UNEXPECTED:
                out = fault.edit.get("output")
                if not out or out in outputs:
                    raise CatError("bad-script", f"step {step}: unexpected-output needs an "
                                   "output that is not already expected")
                outputs.add(out)
            elif fault.kind == UNDEFINED:
                if not outcome.undefined_response:
                    raise CatError("bad-script", f"step {step}: the edited inputs still get a "
                                   f"defined response in {behavior}")
                outputs.clear()
        trace.append(TraceRecord(step, values, frozenset(outputs),
                                 behavior if script.label_behavior else None))
        prev = v
        if outcome.next_behavior != EXIT:
            behavior = outcome.next_behavior
    return trace


def _illegal_target(doc: CatDocument, prev: Optional[Valuation], behavior: str,
                    fault: Fault) -> str:
    if prev is None:
        raise CatError("bad-script", "an illegal transition needs a previous record")
    licensed = {r.target for r in firing_transitions(doc, prev)}
    allowed = [b for b in behavior_set(doc)
               if b != prev.active_behavior and b != behavior and b not in licensed]
    target = fault.edit.get("behavior") or (allowed[0] if allowed else None)
    if target not in allowed:
        raise CatError("bad-script", f"step {fault.step}: no unlicensed behavior change "
                       f"available (asked for {target})")
    return target


def roomba_script(duration: int = 1000, faults: Sequence[Fault] = (),
                  label_behavior: bool = True) -> SimScript:
    """A cleaning-robot day: drive and clean until low, recharge, repeat.

    The drive/clean toggle pulses every 25 steps, the warning light comes on
    for a few steps now and then, and the velocity and cleaning commands cycle.
    """
    return SimScript(
        duration=duration,
        input_profiles={
            "batteryLevel": Battery(),
            "warningLight": Pulse(period=170, width=6, phase=60),
            "cleaningType": Cycle(("spot", "max", "none", "general"), period=40),
            "velocity": Cycle((Decimal("0.3"), Decimal("0.3"), Decimal(0), Decimal("-0.2")),
                              period=15),
            "changeInState": Pulse(period=25, width=1, phase=24),
        },
        fault_injections=tuple(faults),
        label_behavior=label_behavior,
    )
