"""Example tables for a floor-cleaning robot and a quadrotor, shipped as package data."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from ..model import CatDocument, CatError, TableStats
from ..parser import parse

__all__ = ["CorpusEntry", "load_corpus", "corpus_entry", "corpus_document", "corpus_source",
           "corpus_path", "CORPUS_IDS"]


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    file: str
    expected_stats: TableStats
    provenance_notes: str
    document: Optional[CatDocument] = None


_ENTRIES = (
    ("roomba-core", TableStats(3, 6, 5, 14),
     "Stated: behaviors Drive, Clean and Charging; outputs wheelsMove, pickUpDirt and "
     "increasePower; the wheelsMove cells on battery level, warning light, velocity and "
     "change in state; Charging increases power and does not move; Drive and Clean need the "
     "warning light off; a low battery sends the robot to Charging. "
     "Reconstructed: the 20 and 95 percent cutoffs, the velocity domain, the stop rows, "
     "chargeComplete, and every transition other than the low-battery one."),
    ("roomba-clean", TableStats(3, 1, 4, 13),
     "Stated: behaviors Spot, Max and General refining Clean. "
     "Reconstructed: the dirt thresholds, the command vocabulary, the output name and all "
     "transitions."),
    ("roomba-drive", TableStats(3, 3, 6, 16),
     "Stated: behaviors Turn, Forward and Reverse refining Drive; Turn needs the bump sensor "
     "true and the cliff sensor false. "
     "Reconstructed: wheel-drop and wall-distance inputs, output names, thresholds and all "
     "transitions."),
    ("roomba-slam", TableStats(1, 1, 5, 5),
     "Stated: behavior SLAM with a map output; inputs battery level, warning light, IR "
     "sensor, pose estimate and incoming command. "
     "Reconstructed: every condition value, including the mapped-area bounds."),
    ("pelican-core", TableStats(5, 6, 5, 33),
     "Stated: behaviors Idle, Takeoff, Fly, Land and Emergency; Fly holds altitude with "
     "positive altitude and sufficient battery. "
     "Reconstructed: output names other than holdAltitude, every threshold and all "
     "transitions. Counts are authored so the pair with pelican-fly totals 11 behaviors, "
     "12 outputs, 13 inputs and 70 pairs."),
    ("pelican-fly", TableStats(6, 6, 8, 37),
     "Stated: Fly is broken down further; Hover needs a default altitude when no velocity "
     "command is given, otherwise the vehicle drifts upward. "
     "Reconstructed: the five modes other than Hover, all thresholds and transitions."),
)

CORPUS_IDS = tuple(e[0] for e in _ENTRIES)


def _data():
    return resources.files(__package__).joinpath("data")


def corpus_path(entry_id: str):
    """A path-like handle to the shipped ``.cat`` file."""
    if entry_id not in CORPUS_IDS:
        raise CatError("unknown-document", f"no corpus entry {entry_id}")
    return _data().joinpath(f"{entry_id}.cat")


def corpus_source(entry_id: str) -> str:
    return corpus_path(entry_id).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def corpus_document(entry_id: str) -> CatDocument:
    result = parse(corpus_source(entry_id), filename=f"{entry_id}.cat")
    if not result.ok:
        raise CatError("syntax", f"corpus entry {entry_id} does not parse",
                       diagnostics=tuple(result.diagnostics))
    return result.document


def corpus_entry(entry_id: str) -> CorpusEntry:
    for eid, stats, notes in _ENTRIES:
        if eid == entry_id:
            return CorpusEntry(eid, f"{eid}.cat", stats, notes, corpus_document(eid))
    raise CatError("unknown-document", f"no corpus entry {entry_id}")


def load_corpus() -> list[CorpusEntry]:
    return [corpus_entry(eid) for eid in CORPUS_IDS]
