"""Brute-force deciders for tiny histories.

Nothing here touches the hyper-polygraph, pruning or solver code; the
summaries are recomputed from the raw operations so the oracles can check
the rest of the package.
"""
from __future__ import annotations

from dataclasses import dataclass

from .history import INIT_ID, History


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_txns: int = 7  # counting the initial transaction
    max_enumerations: int = 10**7


class _Counter:
    def __init__(self, budget: OracleBudget):
        self.left = budget.max_enumerations

    def tick(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise BudgetExceeded("enumeration budget exhausted")


def _admit(h: History, budget: OracleBudget | None) -> _Counter:
    budget = budget or OracleBudget()
    if len(h) > budget.max_txns:
        raise BudgetExceeded(f"{len(h)} transactions exceed the oracle budget of {budget.max_txns}")
    return _Counter(budget)


def _replay(txn, store: dict) -> dict | None:
    """Run ``txn`` against ``store``; the new store, or None if a read mismatches."""
    local: dict = {}
    for op in txn.ops:
        if op.is_read:
            if local.get(op.key, store.get(op.key)) != op.value:
                return None
        else:
            local[op.key] = op.value
    if not local:
        return store
    new = dict(store)
    new.update(local)
    return new


def oracle_ser_permutation(h: History, budget: OracleBudget | None = None) -> bool:
    """Some session-respecting serial order replays every read."""
    counter = _admit(h, budget)
    sessions = [list(s) for s in h.sessions]
    store0 = {k: h.init_values.get(k, 0) for k in h.key_universe}
    pos = [0] * len(sessions)
    total = sum(map(len, sessions))

    def rec(done: int, store: dict) -> bool:
        if done == total:
            return True
        for i, sess in enumerate(sessions):
            if pos[i] < len(sess):
                counter.tick()
                new = _replay(sess[pos[i]], store)
                if new is not None:
                    pos[i] += 1
                    if rec(done + 1, new):
                        return True
                    pos[i] -= 1
        return False

    return rec(0, store0)


def _has_cycle(n: int, edges, si: bool) -> bool:
    succ = [set() for _ in range(n)]
    if si:
        rw_out: dict[int, list[int]] = {}
        for a, b, kind in edges:
            if kind == "RW":
                rw_out.setdefault(a, []).append(b)
        for a, b, kind in edges:
            if kind != "RW":
                succ[a].add(b)
                for c in rw_out.get(b, ()):
                    if c == a:
                        return True
                    succ[a].add(c)
    else:
        for a, b, _ in edges:
            succ[a].add(b)
    color = [0] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            u, it = stack[-1]
            for w in it:
                if color[w] == 1:
                    return True
                if color[w] == 0:
                    color[w] = 1
                    stack.append((w, iter(succ[w])))
                    break
            else:
                color[u] = 2
                stack.pop()
    return False


def _graph_search(h: History, si: bool, budget: OracleBudget | None) -> bool:
    counter = _admit(h, budget)
    txns = h.transactions
    n = len(txns)
    idx = {t.txn_id: i for i, t in enumerate(txns)}

    final_writes: list[dict] = []
    ext_reads: list[dict] = []
    for t in txns:
        w: dict = {}
        r: dict = {}
        for op in t.ops:
            if op.is_read:
                if op.key not in w and op.key not in r:
                    r[op.key] = op.value
            else:
                w[op.key] = op.value
        final_writes.append(w)
        ext_reads.append(r)

    base = []
    for sess in h.sessions:
        ids = [idx[t.txn_id] for t in sess]
        for i, a in enumerate(ids):
            base.append((idx[INIT_ID], a, "SO"))
            for b in ids[i + 1:]:
                base.append((a, b, "SO"))

    reads = []
    for r, rd in enumerate(ext_reads):
        for key, val in rd.items():
            cands = [w for w in range(n) if w != r and final_writes[w].get(key) == val]
            if not cands:
                return False
            reads.append((r, key, cands))
    keys = sorted({k for w in final_writes for k in w})
    writers = {k: [w for w in range(n) if k in final_writes[w]] for k in keys}

    def place(edges: list, wr: dict, ki: int, rest: list) -> bool:
        if not rest:
            if ki + 1 == len(keys):
                return True
            # the initial transaction (vertex 0) writes every key and comes first
            ws = writers[keys[ki + 1]]
            return _place_one(edges, wr, ki + 1, ws[0], ws[1:])
        for w in rest:
            if _place_one(edges, wr, ki, w, [u for u in rest if u != w]):
                return True
        return False

    def _place_one(edges: list, wr: dict, ki: int, w: int, rest: list) -> bool:
        counter.tick()
        key = keys[ki]
        added = [(w, u, "WW") for u in rest]
        for s in wr.get((w, key), ()):
            added.extend((s, u, "RW") for u in rest if u != s)
        edges.extend(added)
        ok = not _has_cycle(n, edges, si) and place(edges, wr, ki, rest)
        del edges[len(edges) - len(added):]
        return ok

    def choose(i: int, edges: list, wr: dict) -> bool:
        if i == len(reads):
            if not keys:
                return True
            return place(edges, wr, -1, [])
        r, key, cands = reads[i]
        for w in cands:
            counter.tick()
            edges.append((w, r, "WR"))
            wr.setdefault((w, key), []).append(r)
            if not _has_cycle(n, edges, si) and choose(i + 1, edges, wr):
                return True
            wr[(w, key)].pop()
            edges.pop()
        return False

    return choose(0, list(base), {})


def oracle_ser_graphs(h: History, budget: OracleBudget | None = None) -> bool:
    """Some choice of read-from and version orders gives an acyclic graph."""
    return _graph_search(h, False, budget)


def oracle_si(h: History, budget: OracleBudget | None = None) -> bool:
    """Some compatible graph has an acyclic induced SI graph."""
    return _graph_search(h, True, budget)
