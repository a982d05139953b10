"""Code-system translation (e.g. ICD-9 -> ICD-10 -> PhecodeX) and parent truncation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from ..exceptions import ConfigError, DataError
from .types import CodeMap, CodeSystem, Event, EventTable


@dataclass
class UnmappedReport:
    """Per-stage counts of events whose code had no entry in that stage's map."""

    stages: list[tuple[str, Counter]] = field(default_factory=list)

    @property
    def total_events(self) -> int:
        return sum(sum(c.values()) for _, c in self.stages)

    @property
    def codes(self) -> Counter:
        merged: Counter = Counter()
        for _, counts in self.stages:
            merged.update(counts)
        return merged

    def to_dict(self) -> dict:
        return {
            "stages": [
                {"map": name, "unmapped": dict(sorted(counts.items()))}
                for name, counts in self.stages
            ],
            "total_unmapped_events": self.total_events,
        }


def map_codes(events: EventTable, maps: Sequence[CodeMap]) -> tuple[EventTable, UnmappedReport]:
    """Apply a chain of code maps to every event.

    Each event expands to one output event per target code; events whose code
    is absent from a map are dropped and counted per distinct code.

    Returns
    -------
    mapped : EventTable
    report : UnmappedReport
    """
    report = UnmappedReport()
    current = list(events)
    for stage, cmap in enumerate(maps):
        wrong = {ev.system for ev in current if ev.system != cmap.source}
        if wrong:
            names = sorted(s.value for s in wrong)
            raise ConfigError(
                f"map stage {stage} expects {cmap.source.value} codes, events are {names}"
            )
        out: list[Event] = []
        missing: Counter = Counter()
        for ev in current:
            targets = cmap.lookup(ev.code)
            if targets is None:
                missing[ev.code] += 1
                continue
            out.extend(Event(ev.patient_id, t, cmap.target, ev.time) for t in targets)
        report.stages.append((cmap.name or f"{cmap.source.value}->{cmap.target.value}", missing))
        current = out
    return EventTable(tuple(current), n_dropped=events.n_dropped), report


def truncate_to_parent(code: str) -> str:
    """Drop everything from the first ``.`` onward (``CV_401.1`` -> ``CV_401``)."""
    if not code:
        raise DataError("cannot truncate an empty code")
    head, _, _ = code.partition(".")
    return head


def truncate_events(events: EventTable) -> EventTable:
    """Replace every PhecodeX code by its parent category."""
    bad = {ev.system for ev in events if ev.system != CodeSystem.PHECODEX}
    if bad:
        raise ConfigError(
            f"parent truncation applies to PHECODEX codes, got {sorted(s.value for s in bad)}"
        )
    return EventTable(
        tuple(Event(ev.patient_id, truncate_to_parent(ev.code), ev.system, ev.time) for ev in events),
        n_dropped=events.n_dropped,
    )
