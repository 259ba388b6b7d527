"""Hyper-polygraph construction.

Vertices are dense integers: 0 is the initial transaction, the rest follow
session order.  The known graph holds session edges (as a transitive
reduction) and every read-from edge whose writer is unambiguous; the two
constraint families capture the uncertain version orders and the uncertain
read-from choices.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple

from .history import INIT_ID, History, Summaries, summarize

SO, WR, WW, RW = "SO", "WR", "WW", "RW"
EDGE_KINDS = (SO, WR, WW, RW)


class Edge(NamedTuple):
    src: int
    dst: int
    kind: str
    key: str | None = None

    def label(self) -> str:
        return self.kind if self.kind == SO else f"{self.kind}({self.key})"


class WwConstraint(NamedTuple):
    """Either ``a -WW(key)-> b`` or ``b -WW(key)-> a``; stored with ``a < b``."""
    a: int
    b: int
    key: str

    def choices(self) -> tuple[Edge, Edge]:
        return Edge(self.a, self.b, WW, self.key), Edge(self.b, self.a, WW, self.key)


class WrConstraint(NamedTuple):
    """``reader`` read ``value`` of ``key`` from exactly one of ``candidates``."""
    reader: int
    key: str
    value: int
    candidates: tuple[int, ...]

    def choices(self) -> tuple[Edge, ...]:
        return tuple(Edge(c, self.reader, WR, self.key) for c in self.candidates)


class NoWriterError(Exception):
    """A read observed a value that no transaction could have written."""

    def __init__(self, reader: str, key: str, value: int):
        self.reader, self.key, self.value = reader, key, value
        super().__init__(f"{reader} reads {key}={value}, which no other transaction wrote")


@dataclass(frozen=True)
class HyperPolygraph:
    names: tuple[str, ...]
    known_edges: frozenset[Edge]
    cww: tuple[WwConstraint, ...]
    cwr: tuple[WrConstraint, ...]
    # key -> writer vertices (including the initial transaction)
    writers: dict

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def vertices(self) -> range:
        return range(len(self.names))

    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def num_constraints(self) -> int:
        return len(self.cww) + len(self.cwr)

    def edge_str(self, e: Edge) -> str:
        return f"{self.names[e.src]} -{e.label()}-> {self.names[e.dst]}"


def construct(h: History, summaries: Summaries | None = None) -> HyperPolygraph:
    """Build the hyper-polygraph of a history that satisfies the Int axiom."""
    sums = summaries if summaries is not None else summarize(h)
    names = [INIT_ID] + [t.txn_id for t in h.user_transactions]
    idx = {name: i for i, name in enumerate(names)}

    edges: set[Edge] = set()
    for sess in h.sessions:
        prev = 0
        for txn in sess:
            cur = idx[txn.txn_id]
            edges.add(Edge(prev, cur, SO))
            prev = cur

    # (key, value) -> vertices whose final write of key is value
    writers_of: dict[tuple[str, int], list[int]] = {}
    writers: dict[str, list[int]] = {}
    for name in names:
        v = idx[name]
        for key, val in sums[name].writes.items():
            writers_of.setdefault((key, val), []).append(v)
            writers.setdefault(key, []).append(v)

    cwr = []
    for name in names:
        r = idx[name]
        for key, val in sums[name].external_reads.items():
            cands = [w for w in writers_of.get((key, val), ()) if w != r]
            if not cands:
                raise NoWriterError(name, key, val)
            if len(cands) == 1:
                edges.add(Edge(cands[0], r, WR, key))
            else:
                cwr.append(WrConstraint(r, key, val, tuple(sorted(cands))))

    cww = []
    for key in sorted(writers):
        ws = sorted(writers[key])
        cww.extend(WwConstraint(a, b, key) for a, b in combinations(ws, 2))

    return HyperPolygraph(tuple(names), frozenset(edges), tuple(cww), tuple(cwr),
                          {k: tuple(sorted(v)) for k, v in writers.items()})


def rw_closure_missing(edges: Iterable[Edge]) -> set[Edge]:
    """Anti-dependency edges implied by the WR/WW edges of ``edges`` but absent."""
    edges = set(edges)
    readers: dict[tuple[int, str], list[int]] = {}
    succs: dict[tuple[int, str], list[int]] = {}
    for e in edges:
        if e.kind == WR:
            readers.setdefault((e.src, e.key), []).append(e.dst)
        elif e.kind == WW:
            succs.setdefault((e.src, e.key), []).append(e.dst)
    missing = set()
    for (w, key), rs in readers.items():
        for s in succs.get((w, key), ()):
            for r in rs:
                if r != s and Edge(r, s, RW, key) not in edges:
                    missing.add(Edge(r, s, RW, key))
    return missing


def rw_closure(edges: Iterable[Edge]) -> set[Edge]:
    edges = set(edges)
    return edges | rw_closure_missing(edges)


def compatible_ok(g: Iterable[Edge], hp: HyperPolygraph) -> bool:
    """Whether ``g`` contains the known graph, resolves every constraint with
    exactly one choice and carries all derived anti-dependencies."""
    g = set(g)
    if not hp.known_edges <= g:
        return False
    for c in hp.cww:
        if sum(e in g for e in c.choices()) != 1:
            return False
    for c in hp.cwr:
        if sum(e in g for e in c.choices()) != 1:
            return False
    return not rw_closure_missing(g)


def to_dot(hp: HyperPolygraph, name: str = "G") -> str:
    """Graphviz rendering; constraint members are dashed."""
    lines = [f"digraph {name} {{"]
    for i, n in enumerate(hp.names):
        lines.append(f'  {i} [label="{n}"];')
    for e in sorted(hp.known_edges):
        lines.append(f'  {e.src} -> {e.dst} [label="{e.label()}"];')
    for c in hp.cww:
        for e in c.choices():
            lines.append(f'  {e.src} -> {e.dst} [label="{e.label()}", style=dashed];')
    for c in hp.cwr:
        for e in c.choices():
            lines.append(f'  {e.src} -> {e.dst} [label="{e.label()}", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
