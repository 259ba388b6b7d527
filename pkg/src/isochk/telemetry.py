"""Counters, stage timers and cycle-width accounting."""
from __future__ import annotations

import csv
import io
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable

STAGES = ("construct", "prune", "encode", "solve")


def cycle_width(cycle: Iterable) -> int:
    """Number of distinct variables over the reasons of a cycle's edges.

    Accepts theory edges (anything with a ``reason`` attribute) or plain
    iterables of variable ids.
    """
    seen: set[int] = set()
    for e in cycle:
        seen.update(getattr(e, "reason", e))
    return len(seen)


@dataclass
class Telemetry:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    theory_conflicts: int = 0
    learned_clauses: int = 0
    restarts: int = 0
    pk_calls: int = 0
    pk_traversals: int = 0
    cycles_detected: int = 0
    reorders: int = 0
    prune_passes: int = 0
    width_histogram: dict[int, int] = field(default_factory=dict)
    min_cycle_width_histogram: dict[int, int] = field(default_factory=dict)
    # microseconds per stage
    timings: dict[str, int] = field(default_factory=dict)
    skipped_stages: list[str] = field(default_factory=list)

    def record_width(self, width: int, minimal: int | None = None) -> None:
        self.width_histogram[width] = self.width_histogram.get(width, 0) + 1
        if minimal is not None:
            h = self.min_cycle_width_histogram
            h[minimal] = h.get(minimal, 0) + 1

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter_ns()
        try:
            yield
        finally:
            us = (time.perf_counter_ns() - t0) // 1000
            self.timings[name] = self.timings.get(name, 0) + us

    def skip(self, name: str) -> None:
        self.timings.setdefault(name, 0)
        if name not in self.skipped_stages:
            self.skipped_stages.append(name)

    def consistent(self) -> bool:
        return self.cycles_detected <= self.pk_traversals <= self.pk_calls

    def merge(self, other: "Telemetry") -> None:
        """Accumulate another record (batch reducer)."""
        for name in ("decisions", "propagations", "conflicts", "theory_conflicts",
                     "learned_clauses", "restarts", "pk_calls", "pk_traversals",
                     "cycles_detected", "reorders", "prune_passes"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for mine, theirs in ((self.width_histogram, other.width_histogram),
                             (self.min_cycle_width_histogram, other.min_cycle_width_histogram),
                             (self.timings, other.timings)):
            for k, v in theirs.items():
                mine[k] = mine.get(k, 0) + v

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items()
             if k not in ("width_histogram", "min_cycle_width_histogram", "timings")}
        d["width_histogram"] = {str(k): v for k, v in sorted(self.width_histogram.items())}
        d["min_cycle_width_histogram"] = {
            str(k): v for k, v in sorted(self.min_cycle_width_histogram.items())}
        d["timings_us"] = {s: self.timings.get(s, 0) for s in STAGES}
        for k, v in self.timings.items():
            d["timings_us"].setdefault(k, v)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Telemetry":
        t = cls()
        for k, v in d.items():
            if k in ("width_histogram", "min_cycle_width_histogram"):
                setattr(t, k, {int(w): c for w, c in v.items()})
            elif k == "timings_us":
                t.timings = dict(v)
            elif hasattr(t, k):
                setattr(t, k, v)
        return t

    def modal_width(self) -> int | None:
        if not self.width_histogram:
            return None
        return max(sorted(self.width_histogram), key=self.width_histogram.__getitem__)


def histogram_csv(hist: dict[int, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["width", "count"])
    for k in sorted(hist):
        w.writerow([k, hist[k]])
    return buf.getvalue()
