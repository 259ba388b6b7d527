"""Acyclicity theory: an edge-labelled graph kept in pseudo-topological order.

Cycle detection uses the Pearce-Kelly dynamic topological ordering: an edge
``u -> v`` with ``ord[u] < ord[v]`` is accepted in O(1); otherwise a bounded
forward/backward search either finds ``v ~> u`` (a cycle) or reorders the
affected vertices.

Every edge carries a *reason*: the tuple of SAT variables whose truth forces
it.  Known edges have the empty reason.  Edges are removed strictly in LIFO
order, which lets per-vertex adjacency lists be popped from the end.
"""
from __future__ import annotations

from typing import NamedTuple

from ..hyperpolygraph import RW, WR, WW, Edge
from ..prune import iter_bits
from ..telemetry import Telemetry


class TEdge(NamedTuple):
    src: int
    dst: int
    reason: tuple[int, ...]
    # The labelled base edge, or for an induced SI edge a tuple of base edges.
    info: object = None


class TheoryGraph:
    def __init__(self, n: int, order: list[int] | None = None, stats: Telemetry | None = None):
        self.n = n
        self.out: list[list[TEdge]] = [[] for _ in range(n)]
        self.inc: list[list[TEdge]] = [[] for _ in range(n)]
        self.ord = [0] * n
        for i, v in enumerate(order if order is not None else range(n)):
            self.ord[v] = i
        self.stack: list[TEdge] = []
        self.level_marks: list[int] = []
        self.stats = stats if stats is not None else Telemetry()

    @property
    def level(self) -> int:
        return len(self.level_marks)

    def push_level(self) -> None:
        self.level_marks.append(len(self.stack))

    def backtrack(self, level: int) -> None:
        """Drop every edge inserted above decision ``level``."""
        if level >= len(self.level_marks):
            return
        mark = self.level_marks[level]
        del self.level_marks[level:]
        stack, out, inc = self.stack, self.out, self.inc
        while len(stack) > mark:
            e = stack.pop()
            out[e.src].pop()
            inc[e.dst].pop()

    def edges(self) -> list[TEdge]:
        return list(self.stack)

    def _add(self, e: TEdge) -> None:
        self.out[e.src].append(e)
        self.inc[e.dst].append(e)
        self.stack.append(e)

    def insert(self, e: TEdge) -> list[TEdge] | None:
        """Insert ``e``; on a cycle return it (starting with ``e``) and leave the graph unchanged."""
        st = self.stats
        st.pk_calls += 1
        src, dst = e.src, e.dst
        ordv = self.ord
        if src == dst:
            st.pk_traversals += 1
            st.cycles_detected += 1
            return [e]
        ub = ordv[src]
        lb = ordv[dst]
        if lb > ub:
            self._add(e)
            return None
        st.pk_traversals += 1
        out = self.out
        parent = {dst: None}
        todo = [dst]
        while todo:
            u = todo.pop()
            for f in out[u]:
                w = f.dst
                if w == src:
                    path = [f]
                    while parent[u] is not None:
                        path.append(parent[u])
                        u = parent[u].src
                    path.append(e)
                    path.reverse()
                    st.cycles_detected += 1
                    return path
                if w not in parent and ordv[w] < ub:
                    parent[w] = f
                    todo.append(w)
        fwd = list(parent)
        inc = self.inc
        back = {src}
        todo = [src]
        while todo:
            u = todo.pop()
            for f in inc[u]:
                w = f.src
                if w not in back and ordv[w] > lb:
                    back.add(w)
                    todo.append(w)
        key = ordv.__getitem__
        nodes = sorted(back, key=key) + sorted(fwd, key=key)
        slots = sorted(ordv[v] for v in nodes)
        for v, slot in zip(nodes, slots):
            ordv[v] = slot
        st.reorders += 1
        self._add(e)
        return None

    def order_ok(self) -> bool:
        """PK invariant: every present edge goes forward in ``ord``."""
        o = self.ord
        return all(o[e.src] < o[e.dst] for e in self.stack)


def _rw(src: int, dst: int, key: str) -> Edge:
    return Edge(src, dst, RW, key)


class SerTheory:
    """Plain dependency graph: chosen WW/WR edges plus derived anti-dependencies.

    ``derive`` is False in baseline mode, where anti-dependencies are SAT
    variables of their own.
    """

    def __init__(self, n: int, var_edges: list[Edge], known=None, order=None,
                 stats: Telemetry | None = None, derive: bool = True):
        self.g = TheoryGraph(n, order, stats)
        self.var_edges = var_edges
        self.derive = derive
        # bitmask indexes of known WR readers / WW successors per (writer, key)
        self.known_readers: dict[tuple[int, str], int] = known.readers if known else {}
        self.known_succs: dict[tuple[int, str], int] = known.succs if known else {}
        self.chosen_readers: dict[tuple[int, str], list[tuple[int, int]]] = {}
        self.chosen_succs: dict[tuple[int, str], list[tuple[int, int]]] = {}
        self.undo_log: list[list] = []
        self.known_cycle = None
        if known is not None:
            self._insert_known(known)

    def _insert_known(self, known) -> None:
        # Only reachability matters for known edges, so the (reduced) successor
        # sets are enough; labels are recovered when a cycle is reported.
        for u in range(known.n):
            for v in sorted(known.succ[u]):
                cyc = self.g.insert(TEdge(u, v, (), None))
                if cyc is not None:
                    self.known_cycle = cyc
                    return

    @property
    def ord(self) -> list[int]:
        return self.g.ord

    def push_level(self) -> None:
        self.g.push_level()
        self.undo_log.append([])

    def backtrack(self, level: int) -> None:
        while len(self.undo_log) > level:
            for lst in reversed(self.undo_log.pop()):
                lst.pop()
        self.g.backtrack(level)

    def _insert_base(self, e: Edge, reason: tuple[int, ...]):
        return self.g.insert(TEdge(e.src, e.dst, reason, e))

    def _log(self, table: dict, k, item) -> None:
        lst = table.setdefault(k, [])
        lst.append(item)
        if self.undo_log:
            self.undo_log[-1].append(lst)

    def assert_var(self, v: int) -> list[TEdge] | None:
        """The variable ``v`` became true: insert its edge and derived edges."""
        e = self.var_edges[v]
        for src, dst, reason, base in self.derive_rw_edges(v):
            cyc = self.g.insert(TEdge(src, dst, reason, base))
            if cyc is not None:
                return cyc
        if self.derive:
            if e.kind == WW:
                self._log(self.chosen_succs, (e.src, e.key), (e.dst, v))
            elif e.kind == WR:
                self._log(self.chosen_readers, (e.src, e.key), (e.dst, v))
        return None

    def derive_rw_edges(self, v: int) -> list[tuple[int, int, tuple[int, ...], Edge]]:
        """Edges implied by ``v`` being true, each with its reason."""
        e = self.var_edges[v]
        out = [(e.src, e.dst, (v,), e)]
        if not self.derive:
            return out
        k = (e.src, e.key)
        if e.kind == WW:
            t2 = e.dst
            for s in iter_bits(self.known_readers.get(k, 0)):
                if s != t2:
                    out.append((s, t2, (v,), _rw(s, t2, e.key)))
            for s, wv in self.chosen_readers.get(k, ()):
                if s != t2:
                    out.append((s, t2, (v, wv), _rw(s, t2, e.key)))
        elif e.kind == WR:
            s = e.dst
            for t2 in iter_bits(self.known_succs.get(k, 0)):
                if t2 != s:
                    out.append((s, t2, (v,), _rw(s, t2, e.key)))
            for t2, wv in self.chosen_succs.get(k, ()):
                if t2 != s:
                    out.append((s, t2, (wv, v), _rw(s, t2, e.key)))
        return out


class SiTheory(SerTheory):
    """Cycle detection on the induced graph ``(SO|WR|WW);RW?``.

    Base edges are tracked per vertex (non-RW in-edges, RW out-edges) so that
    each new base edge yields its direct and composed induced edges.
    """

    def __init__(self, n: int, var_edges, known=None, order=None,
                 stats: Telemetry | None = None, derive: bool = True):
        self.nonrw_in: list[list[tuple[int, tuple, Edge]]] = [[] for _ in range(n)]
        self.rw_out: list[list[tuple[int, tuple, Edge]]] = [[] for _ in range(n)]
        self.base_stack: list[tuple[Edge, tuple]] = []
        super().__init__(n, var_edges, known, order, stats, derive)

    def _insert_base(self, e: Edge, reason: tuple[int, ...]):
        g = self.g
        if e.kind == RW:
            b, c = e.src, e.dst
            for a, r, base in self.nonrw_in[b]:
                cyc = g.insert(TEdge(a, c, r + reason, (base, e)))
                if cyc is not None:
                    return cyc
            self._log_list(self.rw_out[b], (c, reason, e))
        else:
            a, b = e.src, e.dst
            cyc = g.insert(TEdge(a, b, reason, (e,)))
            if cyc is not None:
                return cyc
            for c, q, base in self.rw_out[b]:
                cyc = g.insert(TEdge(a, c, reason + q, (e, base)))
                if cyc is not None:
                    return cyc
            self._log_list(self.nonrw_in[b], (a, reason, e))
        self.base_stack.append((e, reason))
        self._log_list(self.base_stack, None, already=True)
        return None

    def _log_list(self, lst: list, item, already: bool = False) -> None:
        if not already:
            lst.append(item)
        if self.undo_log:
            self.undo_log[-1].append(lst)

    def assert_var(self, v: int):
        e = self.var_edges[v]
        for src, dst, reason, base in self.derive_rw_edges(v):
            cyc = self._insert_base(base, reason)
            if cyc is not None:
                return cyc
        if self.derive:
            if e.kind == WW:
                self._log(self.chosen_succs, (e.src, e.key), (e.dst, v))
            elif e.kind == WR:
                self._log(self.chosen_readers, (e.src, e.key), (e.dst, v))
        return None

    def _insert_known(self, known) -> None:
        for e in sorted(known.edges):
            cyc = self._insert_base(e, ())
            if cyc is not None:
                self.known_cycle = cyc
                return

    def base_edges(self) -> list[Edge]:
        return [e for e, _ in self.base_stack]


def cycle_edges(cycle: list[TEdge], known_edges=()) -> list[Edge]:
    """Flatten a theory cycle into labelled base edges.

    Unlabelled known edges are looked up in ``known_edges``.
    """
    out = []
    missing = {(t.src, t.dst) for t in cycle if t.info is None}
    label = {}
    if missing:
        for e in known_edges:
            if (e.src, e.dst) in missing and (e.src, e.dst) not in label:
                label[(e.src, e.dst)] = e
    for t in cycle:
        if isinstance(t.info, Edge):
            out.append(t.info)
        elif isinstance(t.info, tuple):
            out.extend(t.info)
        else:
            out.append(label.get((t.src, t.dst), Edge(t.src, t.dst, "?")))
    return out


__all__ = ["TEdge", "TheoryGraph", "SerTheory", "SiTheory", "cycle_edges", "WR", "WW", "RW"]
