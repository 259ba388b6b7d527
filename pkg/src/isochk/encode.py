"""CNF encoding of a (pruned) hyper-polygraph.

Literals are ints: ``2*v`` is variable ``v`` true, ``2*v + 1`` is it false.
Every variable stands for a candidate WW/WR edge; in baseline mode there are
also variables for known edges and for anti-dependency edges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .hyperpolygraph import RW, WR, WW, Edge, HyperPolygraph
from .prune import SER, KnownGraph, iter_bits

log = logging.getLogger(__name__)

DEFAULT_PAIR_BUDGET = 20_000


def pos(v: int) -> int:
    return v << 1


def neg(v: int) -> int:
    return (v << 1) | 1


def lit_var(lit: int) -> int:
    return lit >> 1


def lit_is_neg(lit: int) -> bool:
    return bool(lit & 1)


def normalize_clause(lits) -> tuple[int, ...] | None:
    """Sorted, duplicate-free clause; ``None`` if it is a tautology."""
    s = set(lits)
    for lit in s:
        if lit ^ 1 in s:
            return None
    return tuple(sorted(s))


@dataclass
class CnfProblem:
    vars: list[Edge]
    clauses: list[tuple[int, ...]]
    two_width_clause_count: int = 0
    baseline: bool = False
    names: tuple[str, ...] = ()
    two_width_skipped: bool = False
    var_of: dict[Edge, int] = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    def lit_str(self, lit: int) -> str:
        e = self.vars[lit_var(lit)]
        sign = "~" if lit_is_neg(lit) else ""
        src, dst = (self.names[e.src], self.names[e.dst]) if self.names else (e.src, e.dst)
        key = "" if e.key is None else f"^{e.key}"
        return f"{sign}{e.kind}{key}[{src},{dst}]"

    def clause_str(self, clause) -> str:
        return " | ".join(self.lit_str(lit) for lit in clause) or "<empty>"

    def to_dimacs(self) -> str:
        """DIMACS text of the clause set (the acyclicity theory is not expressible)."""
        lines = [f"c var {v + 1} = {self.lit_str(pos(v))}" for v in range(self.num_vars)]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        for c in self.clauses:
            lines.append(" ".join(str(-(lit_var(l) + 1) if lit_is_neg(l) else lit_var(l) + 1)
                                  for l in c) + " 0")
        return "\n".join(lines) + "\n"


class _Builder:
    def __init__(self, names):
        self.vars: list[Edge] = []
        self.var_of: dict[Edge, int] = {}
        self.clauses: list[tuple[int, ...]] = []
        self.seen: set[tuple[int, ...]] = set()
        self.names = names

    def var(self, e: Edge) -> int:
        v = self.var_of.get(e)
        if v is None:
            v = self.var_of[e] = len(self.vars)
            self.vars.append(e)
        return v

    def add(self, lits) -> bool:
        c = normalize_clause(lits)
        if c is None or c in self.seen:
            return False
        self.seen.add(c)
        self.clauses.append(c)
        return True

    def problem(self, **kw) -> CnfProblem:
        return CnfProblem(self.vars, self.clauses, names=self.names, var_of=self.var_of, **kw)


def _payload_closure(n: int, succ, order, rows, payload: list[int]) -> list[int]:
    """``out[u]`` = OR of ``payload[w]`` over every ``w`` reachable from ``u``."""
    pos_ = [0] * n
    for i, u in enumerate(order):
        pos_[u] = i
    out = [0] * n
    for u in reversed(order):
        acc = payload[u]
        covered = 1 << u
        for v in sorted(succ[u], key=pos_.__getitem__):
            if not (covered >> v) & 1:
                covered |= rows[v]
                acc |= out[v]
        out[u] = acc
    return out


def _two_width(b: _Builder, known: KnownGraph) -> int:
    reach = known.reach
    n = known.n
    nvars = len(b.vars)
    if nvars == 0:
        return 0
    succ = known.succ if known.isolation == SER else known.induced_succ()
    pred = [[] for _ in range(n)]
    for u in range(n):
        for v in succ[u]:
            pred[v].append(u)
    by_src = [0] * n
    by_dst = [0] * n
    for i, e in enumerate(b.vars):
        by_src[e.src] |= 1 << i
        by_dst[e.dst] |= 1 << i
    # from_reach[u]: vars whose source is reachable from u;
    # to_coreach[u]: vars whose target reaches u.
    from_reach = _payload_closure(n, succ, reach.order, reach.rows, by_src)
    to_coreach = _payload_closure(n, pred, reach.order[::-1], reach.cols, by_dst)

    added = 0
    # Canonical: v1 = s1->t1, v2 = s2->t2 with t1 ~> s2 and t2 ~> s1.
    for i, e in enumerate(b.vars):
        partners = (from_reach[e.dst] & to_coreach[e.src]) >> (i + 1)
        for off in iter_bits(partners):
            if b.add((neg(i), neg(i + 1 + off))):
                added += 1

    # Derived RW: WW(T->T') and WR(T->S) on one key derive S -RW-> T'.
    # SER: cycle iff T' ~> S.  SI: the RW edge only closes an induced cycle
    # through a non-RW edge p -> S (p = T via the WR itself, or a known
    # predecessor of S), so the clause needs T' ~> p for some such p.
    ww_by: dict[tuple[int, str], list[int]] = {}
    wr_by: dict[tuple[int, str], list[int]] = {}
    for i, e in enumerate(b.vars):
        if e.kind == WW:
            ww_by.setdefault((e.src, e.key), []).append(i)
        elif e.kind == WR:
            wr_by.setdefault((e.src, e.key), []).append(i)
    rows = reach.rows
    for k, wws in ww_by.items():
        wrs = wr_by.get(k)
        if not wrs:
            continue
        writer = k[0]
        for i in wws:
            t2 = b.vars[i].dst
            for j in wrs:
                s = b.vars[j].dst
                if s == t2:
                    continue
                if known.isolation == SER:
                    hit = (rows[t2] >> s) & 1
                else:
                    hit = rows[t2] & ((1 << writer) | known.nonrw_pred[s])
                if hit and b.add((neg(i), neg(j))):
                    added += 1
    return added


def encode(hp: HyperPolygraph, known: KnownGraph | None, two_width: bool = True,
           pair_budget: int | None = DEFAULT_PAIR_BUDGET) -> CnfProblem:
    """Encode the remaining constraints; ``known`` supplies reachability for the
    2-width clauses (pass ``None`` to skip them)."""
    b = _Builder(hp.names)
    for c in hp.cww:
        fwd, bwd = c.choices()
        x, y = b.var(fwd), b.var(bwd)
        b.add((pos(x), pos(y)))
        b.add((neg(x), neg(y)))
    for c in hp.cwr:
        b.add(tuple(pos(b.var(e)) for e in c.choices()))
    base = len(b.clauses)

    added = 0
    skipped = False
    if two_width and known is not None and known.reach is not None:
        if pair_budget is not None and len(b.vars) > pair_budget:
            log.warning("skipping 2-width encoding: %d variables exceed budget %d",
                        len(b.vars), pair_budget)
            skipped = True
        else:
            added = _two_width(b, known)
    log.debug("encoded %d vars, %d base clauses, %d 2-width clauses", len(b.vars), base, added)
    return b.problem(two_width_clause_count=added, two_width_skipped=skipped)


def encode_baseline(hp: HyperPolygraph) -> CnfProblem:
    """Plain encoding with variables for every edge, exactly-one WR choice and
    explicit anti-dependency implications."""
    b = _Builder(hp.names)
    for e in sorted(hp.known_edges):
        b.add((pos(b.var(e)),))
    for c in hp.cww:
        fwd, bwd = c.choices()
        x, y = b.var(fwd), b.var(bwd)
        b.add((pos(x), pos(y)))
        b.add((neg(x), neg(y)))
    for c in hp.cwr:
        vs = [b.var(e) for e in c.choices()]
        b.add(tuple(pos(v) for v in vs))
        for i, x in enumerate(vs):
            for y in vs[i + 1:]:
                b.add((neg(x), neg(y)))

    # Every WW/WR edge that may appear, grouped by (writer, key).
    ww_by: dict[tuple[int, str], list[Edge]] = {}
    wr_by: dict[tuple[int, str], list[Edge]] = {}
    for e in list(b.vars):
        if e.kind == WW:
            ww_by.setdefault((e.src, e.key), []).append(e)
        elif e.kind == WR:
            wr_by.setdefault((e.src, e.key), []).append(e)
    for k, wws in sorted(ww_by.items()):
        for ww in wws:
            for wr in wr_by.get(k, ()):
                if wr.dst == ww.dst:
                    continue
                rw = b.var(Edge(wr.dst, ww.dst, RW, k[1]))
                b.add((neg(b.var_of[ww]), neg(b.var_of[wr]), pos(rw)))
    return b.problem(baseline=True)
