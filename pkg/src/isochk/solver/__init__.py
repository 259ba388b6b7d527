"""CDCL(T) solving of an encoded hyper-polygraph."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

from ..encode import CnfProblem, neg
from ..hyperpolygraph import RW, WR, WW, Edge, HyperPolygraph, compatible_ok, rw_closure
from ..prune import SER, SI, KnownCycleError, KnownGraph, topological_order
from ..si import induced_edges
from ..telemetry import Telemetry, cycle_width
from .sat import CdclSolver, SolverTimeout, luby
from .theory import SerTheory, SiTheory, TEdge, TheoryGraph, cycle_edges


@dataclass
class SolveOptions:
    isolation: str = SER
    polarity: bool = True
    timeout: float | None = None
    # also search for a minimum-width cycle per conflict (slow)
    min_width_debug: bool = False
    # with polarity on: a WR candidate whose sibling is already true is tried
    # negative, since at most one source is needed
    wr_exclusive: bool = True


@dataclass
class Verdict:
    isolation: str
    satisfied: bool | None
    witness: dict | None = None
    core: dict | None = None
    stats: Telemetry = field(default_factory=Telemetry)
    extra: dict = field(default_factory=dict)
    # the witness graph itself (SAT only; not serialized)
    graph: set | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = {"isolation": self.isolation, "satisfied": self.satisfied}
        if self.witness is not None:
            d["witness"] = self.witness
        if self.core is not None:
            d["core"] = self.core
        stats = self.stats.to_json()
        stats.update(self.extra)
        d["stats"] = stats
        return d


def gen_conflict_clause(cycle) -> list[int]:
    """Negate the union of the reasons along a cycle."""
    vs = set()
    for e in cycle:
        vs.update(e.reason)
    return sorted(neg(v) for v in vs)


def pick_polarity(v: int, var_edges: list[Edge], ord_: list[int]) -> int:
    e = var_edges[v]
    return 2 * v if ord_[e.src] < ord_[e.dst] else 2 * v + 1


def _polarity_fn(cnf: CnfProblem, hp: HyperPolygraph, ord_: list[int], value: list[int],
                 wr_exclusive: bool):
    var_edges = cnf.vars
    if not wr_exclusive or cnf.baseline:
        return lambda v: pick_polarity(v, var_edges, ord_)
    siblings: dict[int, list[int]] = {}
    for c in hp.cwr:
        vs = [cnf.var_of[e] for e in c.choices()]
        for v in vs:
            siblings[v] = vs

    def polarity(v: int) -> int:
        lit = pick_polarity(v, var_edges, ord_)
        if not lit & 1:
            for u in siblings.get(v, ()):
                if value[2 * u] == 1:
                    return lit | 1
        return lit

    return polarity


def _min_width(g: TheoryGraph, new: TEdge) -> int:
    """Smallest width of a cycle closed by ``new``, summing per-edge reason sizes
    along a ``new.dst ~> new.src`` path (an upper bound on the true minimum)."""
    base = set(new.reason)
    dist = {new.dst: 0}
    heap = [(0, new.dst)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == new.src:
            return len(base) + d
        if d > dist.get(u, d):
            continue
        for f in g.out[u]:
            nd = d + len(set(f.reason) - base)
            if nd < dist.get(f.dst, 1 << 60):
                dist[f.dst] = nd
                heapq.heappush(heap, (nd, f.dst))
    return len(base)


class _TheoryAdapter:
    def __init__(self, th: SerTheory, stats: Telemetry, min_width_debug: bool):
        self.th = th
        self.stats = stats
        self.min_width_debug = min_width_debug
        self.last_cycle: list[TEdge] | None = None

    def push_level(self) -> None:
        self.th.push_level()

    def backtrack(self, level: int) -> None:
        self.th.backtrack(level)

    def check(self, lits) -> list[int] | None:
        th = self.th
        for lit in lits:
            if lit & 1:
                continue
            cyc = th.assert_var(lit >> 1)
            if cyc is not None:
                self.last_cycle = cyc
                minimal = _min_width(th.g, cyc[0]) if self.min_width_debug else None
                if minimal is not None:
                    minimal = min(minimal, cycle_width(cyc))
                self.stats.record_width(cycle_width(cyc), minimal)
                return gen_conflict_clause(cyc)
        return None


def graph_acyclic(n: int, edges, isolation: str = SER) -> bool:
    """Independent acyclicity check (induced graph under SI)."""
    succ = [set() for _ in range(n)]
    if isolation == SER:
        for e in edges:
            succ[e.src].add(e.dst)
    else:
        for comp in induced_edges(list(edges)):
            a, b = comp[0].src, comp[-1].dst
            if a == b:
                return False
            succ[a].add(b)
    return topological_order(n, succ) is not None


WITNESS_EDGE_LIMIT = 5000


def _version_orders(hp: HyperPolygraph, g) -> dict[str, list[str]]:
    preds: dict[tuple[str, int], int] = {}
    for e in g:
        if e.kind == WW:
            k = (e.key, e.dst)
            preds[k] = preds.get(k, 0) + 1
    return {key: [hp.names[w] for w in sorted(ws, key=lambda w: preds.get((key, w), 0))]
            for key, ws in sorted(hp.writers.items())}


def witness_json(hp: HyperPolygraph, g, isolation: str) -> dict:
    """A compatible graph as per-key version orders plus read-from choices;
    small graphs also list every edge."""
    names = hp.names
    w = {"version_order": _version_orders(hp, g),
         "reads_from": [{"reader": names[e.dst], "key": e.key, "writer": names[e.src]}
                        for e in sorted(x for x in g if x.kind == WR)]}
    if len(g) <= WITNESS_EDGE_LIMIT:
        w["edges"] = [{"from": names[e.src], "to": names[e.dst], "type": e.kind,
                       **({"key": e.key} if e.key is not None else {})}
                      for e in sorted(g)]
        if isolation == SI:
            w["induced"] = [{"from": names[c[0].src], "to": names[c[-1].dst],
                             "via": [hp.edge_str(x) for x in c]}
                            for c in induced_edges(sorted(g))]
    return w


def _cycle_json(hp: HyperPolygraph, edges) -> list[str]:
    return [hp.edge_str(e) for e in edges]


def build_witness(cnf: CnfProblem, hp: HyperPolygraph, model: list[bool]) -> set[Edge]:
    """Known edges plus one true choice per constraint, RW-closed."""
    var_of = cnf.var_of
    chosen = set()
    for c in hp.cww:
        for e in c.choices():
            if model[var_of[e]]:
                chosen.add(e)
                break
    for c in hp.cwr:
        for e in c.choices():
            if model[var_of[e]]:
                chosen.add(e)
                break
    if cnf.baseline:
        return rw_closure(chosen | {e for e in hp.known_edges if e.kind != RW})
    # The known graph is RW-closed on its own; only pairs touching a chosen
    # edge can add anti-dependencies.
    g = set(hp.known_edges)
    g |= chosen
    readers: dict[tuple[int, str], list[int]] = {}
    succs: dict[tuple[int, str], list[int]] = {}
    for e in g:
        if e.kind == WR:
            readers.setdefault((e.src, e.key), []).append(e.dst)
        elif e.kind == WW:
            succs.setdefault((e.src, e.key), []).append(e.dst)
    for e in chosen:
        k = (e.src, e.key)
        if e.kind == WW:
            g.update(Edge(r, e.dst, RW, e.key) for r in readers.get(k, ()) if r != e.dst)
        else:
            g.update(Edge(e.dst, t, RW, e.key) for t in succs.get(k, ()) if t != e.dst)
    return g


def solve(cnf: CnfProblem, hp: HyperPolygraph, opts: SolveOptions | None = None,
          stats: Telemetry | None = None, known: KnownGraph | None = None,
          original: HyperPolygraph | None = None) -> Verdict:
    """Decide ``hp`` (already pruned, or not) using its encoding ``cnf``.

    ``known`` is the refreshed known graph of ``hp`` (built here if omitted);
    its topological order seeds the theory's order.  ``original`` is the
    unpruned hyper-polygraph that SAT witnesses are audited against.
    """
    opts = opts or SolveOptions()
    stats = stats if stats is not None else Telemetry()
    deadline = time.monotonic() + opts.timeout if opts.timeout is not None else None
    verdict = Verdict(opts.isolation, None, stats=stats)
    order = None
    if cnf.baseline:
        known = None
    else:
        if known is None:
            known = KnownGraph(hp.n, hp.known_edges, opts.isolation)
            try:
                known.refresh()
            except KnownCycleError as exc:
                verdict.satisfied = False
                verdict.core = {"final_conflict": [], "cycle": _cycle_json(hp, exc.cycle)}
                return verdict
        order = known.reach.order
    cls = SiTheory if opts.isolation == SI else SerTheory
    th = cls(hp.n, cnf.vars, known, order=order, stats=stats, derive=not cnf.baseline)
    if th.known_cycle is not None:
        verdict.satisfied = False
        verdict.core = {"final_conflict": [],
                        "cycle": _cycle_json(hp, cycle_edges(th.known_cycle, hp.known_edges))}
        return verdict

    adapter = _TheoryAdapter(th, stats, opts.min_width_debug)
    sat = CdclSolver(cnf.num_vars, cnf.clauses, adapter, None, stats, deadline)
    if opts.polarity:
        sat.polarity = _polarity_fn(cnf, hp, th.ord, sat.value, opts.wr_exclusive)
    try:
        result = sat.solve()
    except SolverTimeout:
        verdict.extra["timeout"] = True
        return verdict

    if result:
        g = build_witness(cnf, hp, sat.model)
        audit = original if original is not None else hp
        if not compatible_ok(g, audit) or not graph_acyclic(hp.n, g, opts.isolation):
            raise AssertionError("solver produced a witness that fails the audit")
        verdict.satisfied = True
        verdict.graph = g
        verdict.witness = witness_json(hp, g, opts.isolation)
    else:
        verdict.satisfied = False
        cyc = adapter.last_cycle
        verdict.core = {
            "final_conflict": [cnf.lit_str(l) for l in sat.final_conflict],
            "cycle": _cycle_json(hp, cycle_edges(cyc, hp.known_edges)) if cyc else [],
        }
    return verdict


__all__ = ["SolveOptions", "Verdict", "solve", "gen_conflict_clause", "pick_polarity",
           "graph_acyclic", "induced_edges", "build_witness", "witness_json", "CdclSolver", "SolverTimeout",
           "SerTheory", "SiTheory", "TheoryGraph", "TEdge", "luby", "WR", "WW"]
