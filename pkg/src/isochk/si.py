"""Snapshot Isolation via the induced graph ``(SO | WR | WW) ; RW?``.

Every non-RW edge is an induced edge on its own; a non-RW edge followed by an
RW edge out of its target composes into one more.  A history satisfies SI
iff some compatible graph has an acyclic induced graph.  Self-loops count.

The incremental variant used during solving lives in
:class:`isochk.solver.theory.SiTheory`; pruning and 2-width encoding work on
the reachability of the induced known graph (see ``prune.KnownGraph``).
"""
from __future__ import annotations

from typing import Iterable, NamedTuple

from .hyperpolygraph import RW, Edge


class InducedEdge(NamedTuple):
    src: int
    dst: int
    # (base,) for a direct edge, (base, rw) for a composed one
    via: tuple[Edge, ...]

    @property
    def composed(self) -> bool:
        return len(self.via) == 2


def induced_edges(edges: Iterable[Edge]) -> list[tuple[Edge, ...]]:
    """Edges of the induced graph, each given as its one or two base edges."""
    edges = list(edges)
    rw_out: dict[int, list[Edge]] = {}
    for e in edges:
        if e.kind == RW:
            rw_out.setdefault(e.src, []).append(e)
    out = []
    for e in edges:
        if e.kind != RW:
            out.append((e,))
            for r in rw_out.get(e.dst, ()):
                out.append((e, r))
    return out


def induced_graph(edges: Iterable[Edge]) -> list[InducedEdge]:
    return [InducedEdge(c[0].src, c[-1].dst, c) for c in induced_edges(edges)]


def verify_si(h, opts=None):
    """Check a history against Snapshot Isolation."""
    from .verify import VerifyOptions, verify

    opts = opts or VerifyOptions()
    opts = opts.replace(isolation="si")
    return verify(h, opts)
