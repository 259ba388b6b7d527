"""Reachability over the known graph and fixpoint pruning of 1-width cycles.

Reachability rows are Python ints used as bit arrays: bit ``j`` of
``rows[i]`` is set iff ``j`` is reachable from ``i`` (reflexively).

Pruning repeatedly drops constraint choices that would close a cycle with
the known graph (directly or through the anti-dependencies they derive) and
moves singleton constraints into the known graph.  Under snapshot isolation
the same rules run against the induced graph ``(SO|WR|WW);RW?``.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .hyperpolygraph import RW, WR, WW, Edge, HyperPolygraph, WrConstraint, WwConstraint

log = logging.getLogger(__name__)

SER, SI = "ser", "si"


class KnownCycleError(Exception):
    """The known graph (or its induced SI graph) is cyclic."""

    def __init__(self, cycle: list):
        self.cycle = cycle
        super().__init__(f"known graph is cyclic ({len(cycle)} edges)")


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def topological_order(n: int, succ: list) -> list[int] | None:
    """Kahn's algorithm; ``None`` if the graph has a cycle."""
    indeg = [0] * n
    for u in range(n):
        for v in succ[u]:
            indeg[v] += 1
    queue = deque(u for u in range(n) if indeg[u] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == n else None


def find_cycle(n: int, succ: list) -> list[tuple[int, int]]:
    """Some cycle of a cyclic graph as a list of (u, v) vertex pairs."""
    for u in range(n):
        if u in succ[u]:
            return [(u, u)]
    color = [0] * n
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            u, it = stack[-1]
            for v in it:
                if color[v] == 0:
                    color[v] = 1
                    parent[v] = u
                    stack.append((v, iter(succ[v])))
                    break
                if color[v] == 1:
                    path = [(u, v)]
                    w = u
                    while w != v:
                        path.append((parent[w], w))
                        w = parent[w]
                    path.reverse()
                    return path
            else:
                color[u] = 2
                stack.pop()
    return []


def _closure(n: int, succ: list, order: list[int], reduce: bool = False) -> list[int]:
    """Reachability rows.  With ``reduce`` each ``succ[u]`` set is cut down in
    place to the transitive reduction (successors not reachable otherwise)."""
    pos = [0] * n
    for i, u in enumerate(order):
        pos[u] = i
    rows = [0] * n
    for u in reversed(order):
        r = 1 << u
        su = succ[u]
        if len(su) == 1:
            for v in su:
                r |= rows[v]
        else:
            kept = []
            # Nearest successors first: later ones are often already covered.
            for v in sorted(su, key=pos.__getitem__):
                if not (r >> v) & 1:
                    r |= rows[v]
                    kept.append(v)
            if reduce and len(kept) < len(su):
                su.intersection_update(kept)
        rows[u] = r
    return rows


def _transpose(n: int, rows: list[int]) -> list[int]:
    cols = [0] * n
    for i in range(n):
        bit = 1 << i
        for j in iter_bits(rows[i]):
            cols[j] |= bit
    return cols


class ReachMatrix:
    """Reflexive-transitive closure of a DAG as bit rows."""

    def __init__(self, n: int, succ: list, order: list[int] | None = None,
                 reduce: bool = False):
        self.n = n
        if order is None:
            order = topological_order(n, succ)
            if order is None:
                raise KnownCycleError(find_cycle(n, succ))
        self.order = order
        self.rows = _closure(n, succ, order, reduce)
        self._cols = None
        self._succ = succ

    def reaches(self, a: int, b: int) -> bool:
        return bool((self.rows[a] >> b) & 1)

    def __getitem__(self, a: int) -> int:
        return self.rows[a]

    @property
    def cols(self) -> list[int]:
        """Column view: bit ``i`` of ``cols[j]`` iff ``i`` reaches ``j``."""
        if self._cols is None:
            # Reverse-graph closure is cheaper than transposing dense rows.
            pred = [[] for _ in range(self.n)]
            for u in range(self.n):
                for v in self._succ[u]:
                    pred[v].append(u)
            self._cols = _closure(self.n, pred, self.order[::-1])
        return self._cols

    def reachable_set(self, a: int) -> set[int]:
        return set(iter_bits(self.rows[a]))


def _succ_lists(n: int, edges: Iterable[Edge]) -> list[set[int]]:
    succ = [set() for _ in range(n)]
    for e in edges:
        succ[e.src].add(e.dst)
    return succ


def reachability(hp: HyperPolygraph) -> ReachMatrix:
    """Reachability of ``hp``'s known graph; raises :class:`KnownCycleError`."""
    return ReachMatrix(hp.n, _succ_lists(hp.n, hp.known_edges))


class KnownGraph:
    """Mutable view of a known graph with the indexes pruning and encoding need.

    ``readers[(w, key)]`` is a bitmask of vertices with a known ``w -WR(key)->``
    edge, ``succs[(w, key)]`` the same for known ``WW(key)`` successors.
    """

    def __init__(self, n: int, edges: Iterable[Edge], isolation: str = SER):
        self.n = n
        self.isolation = isolation
        self.edges: set[Edge] = set()
        self.succ = [set() for _ in range(n)]
        self.readers: dict[tuple[int, str], int] = {}
        self.succs: dict[tuple[int, str], int] = {}
        # SI bookkeeping: per vertex, masks of known non-RW predecessors and RW successors
        self.nonrw_pred = [0] * n
        self.rw_succ = [0] * n
        self.reach: ReachMatrix | None = None
        for e in edges:
            self.add(e)

    def add(self, e: Edge) -> bool:
        if e in self.edges:
            return False
        self.edges.add(e)
        self.succ[e.src].add(e.dst)
        if e.kind == WR:
            k = (e.src, e.key)
            self.readers[k] = self.readers.get(k, 0) | (1 << e.dst)
        elif e.kind == WW:
            k = (e.src, e.key)
            self.succs[k] = self.succs.get(k, 0) | (1 << e.dst)
        if e.kind == RW:
            self.rw_succ[e.src] |= 1 << e.dst
        else:
            self.nonrw_pred[e.dst] |= 1 << e.src
        return True

    def induced_succ(self) -> list[set[int]]:
        out = []
        for a in range(self.n):
            s = set(self.succ_nonrw(a))
            for b in list(s):
                s.update(iter_bits(self.rw_succ[b]))
            out.append(s)
        return out

    def succ_nonrw(self, a: int):
        return [b for b in self.succ[a] if (self.nonrw_pred[b] >> a) & 1]

    def refresh(self) -> ReachMatrix:
        """Recompute reachability (of the induced graph under SI)."""
        succ = self.succ if self.isolation == SER else self.induced_succ()
        order = topological_order(self.n, succ)
        if order is None:
            raise KnownCycleError(self._labelled_cycle(find_cycle(self.n, succ)))
        # Under SER redundant successors are dropped for good: reachability
        # only grows, so they stay redundant.
        self.reach = ReachMatrix(self.n, succ, order, reduce=self.isolation == SER)
        return self.reach

    def _labelled_cycle(self, pairs: list[tuple[int, int]]) -> list:
        """Attach base edges to a cycle of vertex pairs (induced pairs may need two)."""
        by_pair: dict[tuple[int, int], Edge] = {}
        for e in self.edges:
            by_pair.setdefault((e.src, e.dst), e)
        out = []
        for u, v in pairs:
            if self.isolation == SER:
                out.append(by_pair[(u, v)])
                continue
            if (self.nonrw_pred[v] >> u) & 1:
                out.append(self._nonrw_edge(u, v))
                continue
            # induced pair: u -nonRW-> b -RW-> v
            for b in self.succ_nonrw(u):
                if (self.rw_succ[b] >> v) & 1:
                    out.append(self._nonrw_edge(u, b))
                    out.append(self._rw_edge(b, v))
                    break
        return out

    def _nonrw_edge(self, u: int, v: int) -> Edge:
        return next(e for e in self.edges if e.src == u and e.dst == v and e.kind != RW)

    def _rw_edge(self, u: int, v: int) -> Edge:
        return next(e for e in self.edges if e.src == u and e.dst == v and e.kind == RW)

    # -- choice analysis -------------------------------------------------
    def ww_edges(self, a: int, b: int, key: str) -> list[Edge]:
        """``a -WW(key)-> b`` plus the anti-dependencies it derives."""
        out = [Edge(a, b, WW, key)]
        for s in iter_bits(self.readers.get((a, key), 0) & ~(1 << b)):
            out.append(Edge(s, b, RW, key))
        return out

    def wr_edges(self, w: int, r: int, key: str) -> list[Edge]:
        """``w -WR(key)-> r`` plus the anti-dependencies it derives."""
        out = [Edge(w, r, WR, key)]
        for t in iter_bits(self.succs.get((w, key), 0) & ~(1 << r)):
            out.append(Edge(r, t, RW, key))
        return out

    def ww_cyclic(self, a: int, b: int, key: str) -> bool:
        rows = self.reach.rows
        if self.isolation == SER:
            rb = rows[b]
            return bool((rb >> a) & 1 or rb & self.readers.get((a, key), 0) & ~(1 << b))
        return self._si_cyclic(self.ww_edges(a, b, key))

    def wr_cyclic(self, w: int, r: int, key: str) -> bool:
        if self.isolation == SER:
            if (self.reach.rows[r] >> w) & 1:
                return True
            succs = self.succs.get((w, key), 0) & ~(1 << r)
            return bool(succs and self.reach.cols[r] & succs)
        return self._si_cyclic(self.wr_edges(w, r, key))

    def _si_cyclic(self, new: list[Edge]) -> bool:
        """Whether adding ``new`` creates an induced edge closing a cycle."""
        rows = self.reach.rows
        cols = self.reach.cols
        new_rw_succ: dict[int, int] = {}
        new_nonrw_pred: dict[int, int] = {}
        for e in new:
            if e.kind == RW:
                new_rw_succ[e.src] = new_rw_succ.get(e.src, 0) | (1 << e.dst)
            else:
                new_nonrw_pred[e.dst] = new_nonrw_pred.get(e.dst, 0) | (1 << e.src)
        for e in new:
            if e.kind == RW:
                sources = self.nonrw_pred[e.src] | new_nonrw_pred.get(e.src, 0)
                if sources & rows[e.dst]:
                    return True
            else:
                targets = (1 << e.dst) | self.rw_succ[e.dst] | new_rw_succ.get(e.dst, 0)
                if targets & cols[e.src]:
                    return True
        return False

    def path(self, a: int, b: int) -> list[Edge]:
        """Shortest known-edge path from ``a`` to ``b`` (plain graph)."""
        prev: dict[int, Edge | None] = {a: None}
        queue = deque([a])
        out_edges: dict[int, list[Edge]] = {}
        for e in self.edges:
            out_edges.setdefault(e.src, []).append(e)
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for e in out_edges.get(u, ()):
                if e.dst not in prev:
                    prev[e.dst] = e
                    queue.append(e.dst)
        if b not in prev:
            return []
        path = []
        while prev[b] is not None:
            path.append(prev[b])
            b = prev[b].src
        return path[::-1]


@dataclass
class PruneStats:
    passes: int = 0
    ww_choices_eliminated: int = 0
    wr_choices_eliminated: int = 0
    constraints_resolved: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Pruned:
    hp: HyperPolygraph
    passes: int
    known: KnownGraph
    stats: PruneStats = field(default_factory=PruneStats)

    @property
    def reach(self) -> ReachMatrix:
        return self.known.reach


@dataclass
class PruneViolation:
    kind: str  # "NoChoice" or "KnownCycle"
    witness: dict
    stats: PruneStats = field(default_factory=PruneStats)
    passes: int = 0


def _no_choice_witness(known: KnownGraph, hp: HyperPolygraph, constraint) -> dict:
    choices = []
    for e in constraint.choices():
        added = (known.ww_edges(e.src, e.dst, e.key) if e.kind == WW
                 else known.wr_edges(e.src, e.dst, e.key))
        closing = []
        for a in added:
            back = known.path(a.dst, a.src) if a.dst != a.src else []
            if back or a.dst == a.src:
                closing = [a] + back
                break
        choices.append({"choice": hp.edge_str(e),
                        "cycle": [hp.edge_str(x) for x in closing]})
    if isinstance(constraint, WwConstraint):
        desc = {"type": "WW", "key": constraint.key,
                "between": [hp.names[constraint.a], hp.names[constraint.b]]}
    else:
        desc = {"type": "WR", "key": constraint.key, "value": constraint.value,
                "reader": hp.names[constraint.reader]}
    return {"constraint": desc, "choices": choices}


def prune(hp: HyperPolygraph, isolation: str = SER, max_passes: int | None = None):
    """Run the pruning fixpoint.  Returns :class:`Pruned` or :class:`PruneViolation`."""
    stats = PruneStats()
    known = KnownGraph(hp.n, hp.known_edges, isolation)
    try:
        known.refresh()
    except KnownCycleError as exc:
        return PruneViolation("KnownCycle", {"cycle": [hp.edge_str(e) for e in exc.cycle]}, stats)

    cww: list[WwConstraint] = list(hp.cww)
    cwr: list[WrConstraint] = list(hp.cwr)
    while True:
        if max_passes is not None and stats.passes >= max_passes:
            break
        stats.passes += 1
        changed = False

        # WW constraints, in id order
        remaining = []
        introduced = False
        for c in cww:
            a, b, key = c
            fwd_bad = known.ww_cyclic(a, b, key)
            bwd_bad = known.ww_cyclic(b, a, key)
            if fwd_bad and bwd_bad:
                stats.ww_choices_eliminated += 2
                return PruneViolation("NoChoice", _no_choice_witness(known, hp, c), stats,
                                      stats.passes)
            if fwd_bad or bwd_bad:
                stats.ww_choices_eliminated += 1
                stats.constraints_resolved += 1
                src, dst = (b, a) if fwd_bad else (a, b)
                for e in known.ww_edges(src, dst, key):
                    known.add(e)
                introduced = changed = True
            else:
                remaining.append(c)
        cww = remaining
        if introduced:
            try:
                known.refresh()
            except KnownCycleError as exc:
                return PruneViolation("KnownCycle",
                                      {"cycle": [hp.edge_str(e) for e in exc.cycle]},
                                      stats, stats.passes)

        remaining_wr = []
        introduced = False
        for c in cwr:
            keep = tuple(w for w in c.candidates if not known.wr_cyclic(w, c.reader, c.key))
            if len(keep) < len(c.candidates):
                stats.wr_choices_eliminated += len(c.candidates) - len(keep)
                changed = True
            if not keep:
                return PruneViolation("NoChoice", _no_choice_witness(known, hp, c), stats,
                                      stats.passes)
            if len(keep) == 1:
                stats.constraints_resolved += 1
                for e in known.wr_edges(keep[0], c.reader, c.key):
                    known.add(e)
                introduced = True
            else:
                remaining_wr.append(c._replace(candidates=keep))
        cwr = remaining_wr
        if introduced:
            try:
                known.refresh()
            except KnownCycleError as exc:
                return PruneViolation("KnownCycle",
                                      {"cycle": [hp.edge_str(e) for e in exc.cycle]},
                                      stats, stats.passes)
        if not changed:
            break

    log.debug("pruning finished after %d passes: %d WW / %d WR constraints left",
              stats.passes, len(cww), len(cwr))
    pruned = HyperPolygraph(hp.names, known.edges, tuple(cww), tuple(cwr), hp.writers)
    return Pruned(pruned, stats.passes, known, stats)


def prune_pass_is_idle(p: Pruned, isolation: str = SER) -> bool:
    """Audit: one more pass over a pruned instance applies no rule."""
    known = p.known
    for a, b, key in p.hp.cww:
        if known.ww_cyclic(a, b, key) or known.ww_cyclic(b, a, key):
            return False
    for c in p.hp.cwr:
        if len(c.candidates) < 2:
            return False
        if any(known.wr_cyclic(w, c.reader, c.key) for w in c.candidates):
            return False
    return True
