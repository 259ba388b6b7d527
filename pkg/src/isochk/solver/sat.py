"""A small CDCL(T) core in the Minisat mould.

Two watched literals, first-UIP learning, VSIDS-style activities with a lazy
heap, Luby restarts and LBD-based reduction of the learnt clause database.
A theory object is consulted after every propagation fixpoint; it sees each
newly true variable once and may answer with a conflict clause.
"""
from __future__ import annotations

import heapq
import time

from ..telemetry import Telemetry


class SolverTimeout(Exception):
    pass


def luby(i: int) -> int:
    """The i-th element (0-based) of the Luby sequence 1,1,2,1,1,2,4,..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


class NullTheory:
    def push_level(self) -> None:
        pass

    def backtrack(self, level: int) -> None:
        pass

    def check(self, lits) -> list[int] | None:
        return None


class CdclSolver:
    restart_base = 100
    var_decay = 0.95
    clause_decay = 0.999

    def __init__(self, num_vars: int, clauses, theory=None, polarity=None,
                 stats: Telemetry | None = None, deadline: float | None = None):
        self.n = num_vars
        self.theory = theory if theory is not None else NullTheory()
        # polarity(v) -> literal to try, or None for saved phase
        self.polarity = polarity
        self.stats = stats if stats is not None else Telemetry()
        self.deadline = deadline

        self.value = [0] * (2 * num_vars)   # per literal: 1 true, -1 false, 0 unset
        self.level = [0] * num_vars
        self.reason: list[int | None] = [None] * num_vars
        self.phase = [1] * num_vars          # saved literal parity (1 = negative)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.theory_head = 0

        self.clauses: list[list[int] | None] = []
        self.learnt: list[bool] = []
        self.lbd: list[int] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * num_vars)]
        self.num_learnts = 0
        self.max_learnts = max(2000, len(clauses) // 3)

        self.activity = [0.0] * num_vars
        self.var_inc = 1.0
        self.heap = [(0.0, v) for v in range(num_vars)]
        self.seen = [False] * num_vars
        self.ok = True
        self.model: list[bool] | None = None
        self.final_conflict: list[int] = []

        for c in clauses:
            if not self._add_input(list(c)):
                self.ok = False
                break

    # -- clause database -------------------------------------------------

    def _add_input(self, c: list[int]) -> bool:
        value = self.value
        if any(value[l] == 1 for l in c):
            return True
        c = [l for l in c if value[l] == 0]
        if not c:
            return False
        if len(c) == 1:
            self._enqueue(c[0], None)
            return True
        self._attach(c, learnt=False, lbd=0)
        return True

    def _attach(self, c: list[int], learnt: bool, lbd: int) -> int:
        ci = len(self.clauses)
        self.clauses.append(c)
        self.learnt.append(learnt)
        self.lbd.append(lbd)
        self.watches[c[0]].append(ci)
        self.watches[c[1]].append(ci)
        if learnt:
            self.num_learnts += 1
        return ci

    def _reduce_db(self) -> None:
        locked = {self.reason[l >> 1] for l in self.trail}
        cands = [ci for ci, c in enumerate(self.clauses)
                 if c is not None and self.learnt[ci] and self.lbd[ci] > 2 and ci not in locked]
        cands.sort(key=lambda ci: (-self.lbd[ci], -len(self.clauses[ci])))
        for ci in cands[: len(cands) // 2]:
            self.clauses[ci] = None
            self.num_learnts -= 1
        # deleted clauses are dropped from watch lists lazily in propagate()
        self.max_learnts = int(self.max_learnts * 1.1) + 1

    # -- assignment ------------------------------------------------------

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: int | None) -> None:
        v = lit >> 1
        self.value[lit] = 1
        self.value[lit ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _backtrack(self, level: int) -> None:
        if self.decision_level <= level:
            return
        value, phase, act, heap = self.value, self.phase, self.activity, self.heap
        lim = self.trail_lim[level]
        for i in range(len(self.trail) - 1, lim - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            value[lit] = 0
            value[lit ^ 1] = 0
            self.reason[v] = None
            phase[v] = lit & 1
            heapq.heappush(heap, (-act[v], v))
        del self.trail[lim:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)
        self.theory_head = min(self.theory_head, len(self.trail))
        self.theory.backtrack(level)

    def _propagate(self) -> int | None:
        """Unit propagation; returns a conflicting clause index or None."""
        value, clauses, watches, trail = self.value, self.clauses, self.watches, self.trail
        props = 0
        while self.qhead < len(trail):
            false_lit = trail[self.qhead] ^ 1
            self.qhead += 1
            ws = watches[false_lit]
            i = j = 0
            end = len(ws)
            while i < end:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                if value[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if value[lk] != -1:
                        c[1], c[k] = lk, false_lit
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if value[first] == -1:
                        while i < end:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.stats.propagations += props
                        return ci
                    self._enqueue(first, ci)
                    props += 1
            del ws[j:]
        self.stats.propagations += props
        return None

    # -- learning --------------------------------------------------------

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(self.n):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], u) for u in range(self.n) if self.value[2 * u] == 0]
            heapq.heapify(self.heap)
        elif self.value[2 * v] == 0:
            heapq.heappush(self.heap, (-act[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen, level, trail = self.seen, self.level, self.trail
        cur = self.decision_level
        learnt = [0]
        path = 0
        idx = len(trail) - 1
        lits = confl
        p = -1
        while True:
            for q in lits:
                if q == p:
                    continue
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = False
            path -= 1
            if path == 0:
                break
            lits = self.clauses[self.reason[v]]
        learnt[0] = p ^ 1
        for q in learnt[1:]:
            seen[q >> 1] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[learnt[i] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _handle_conflict(self, confl: list[int]) -> bool:
        """Learn from a falsified clause and backjump; False means UNSAT."""
        st = self.stats
        st.conflicts += 1
        level = self.level
        top = max((level[l >> 1] for l in confl), default=0)
        if top == 0:
            self.final_conflict = confl
            return False
        if top < self.decision_level:
            self._backtrack(top)
        learnt, bt = self._analyze(confl)
        self._backtrack(bt)
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
        else:
            lbd = len({level[l >> 1] for l in learnt})
            ci = self._attach(learnt, learnt=True, lbd=lbd)
            self._enqueue(learnt[0], ci)
        st.learned_clauses += 1
        self.var_inc /= self.var_decay
        return True

    # -- theory ----------------------------------------------------------

    def _theory_check(self) -> list[int] | None:
        head = self.theory_head
        trail = self.trail
        if head >= len(trail):
            return None
        confl = self.theory.check(trail[head:])
        if confl is None:
            self.theory_head = len(trail)
        return confl

    # -- main loop -------------------------------------------------------

    def _pick(self) -> int | None:
        heap, value, act = self.heap, self.value, self.activity
        while heap:
            a, v = heapq.heappop(heap)
            if value[2 * v] == 0 and -a == act[v]:
                return v
        for v in range(self.n):
            if value[2 * v] == 0:
                return v
        return None

    def _check_time(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout()

    def solve(self) -> bool:
        """True if satisfiable (model in ``self.model``).  May raise SolverTimeout."""
        if not self.ok:
            return False
        self._check_time()
        st = self.stats
        restart_no = 0
        budget = luby(0) * self.restart_base
        since_restart = 0
        ticks = 0
        while True:
            ci = self._propagate()
            if ci is None:
                confl = self._theory_check()
                if confl is None:
                    if since_restart >= budget:
                        st.restarts += 1
                        restart_no += 1
                        budget = luby(restart_no) * self.restart_base
                        since_restart = 0
                        self._backtrack(0)
                        continue
                    if self.num_learnts - len(self.trail) >= self.max_learnts:
                        self._reduce_db()
                    v = self._pick()
                    if v is None:
                        self.model = [self.value[2 * u] == 1 for u in range(self.n)]
                        return True
                    st.decisions += 1
                    ticks += 1
                    if ticks & 255 == 0:
                        self._check_time()
                    lit = self.polarity(v) if self.polarity is not None else None
                    if lit is None:
                        lit = 2 * v + self.phase[v]
                    self.trail_lim.append(len(self.trail))
                    self.theory.push_level()
                    self._enqueue(lit, None)
                    continue
                st.theory_conflicts += 1
            else:
                confl = self.clauses[ci]
            since_restart += 1
            ticks += 1
            if ticks & 255 == 0:
                self._check_time()
            if not self._handle_conflict(list(confl)):
                self.ok = False
                return False
