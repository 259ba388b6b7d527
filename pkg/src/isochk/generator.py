"""Parametric workload generator.

Transactions are produced per session and executed one at a time against a
single in-memory store, round-robin across sessions, so every generated
history is serializable and satisfies the Int axiom by construction.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .history import INIT_ID, READ, WRITE, History, Operation, Transaction

STALE_READ = "StaleRead"
LOST_UPDATE = "LostUpdateTrace"
WRITE_SKEW = "WriteSkewTrace"
ANOMALIES = (STALE_READ, LOST_UPDATE, WRITE_SKEW)


class NotApplicable(Exception):
    pass


@dataclass(frozen=True)
class GenParams:
    sessions: int = 20
    txns_per_session: int = 100
    ops_per_txn: int = 20
    read_fraction: float = 0.5
    num_keys: int = 5000
    dup_key_fraction: float = 0.5
    zipf_theta: float = 0.5
    zipf_n: int = 100
    seed: int = 0
    # read-modify-write transactions: every write is preceded by a read of its key
    rmw: bool = False
    # key access skew; 0 is uniform, otherwise Zipf over the key indexes
    key_theta: float = 0.0

    def __post_init__(self):
        for name in ("read_fraction", "dup_key_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("sessions", "txns_per_session", "ops_per_txn", "num_keys", "zipf_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.zipf_n < 1:
            raise ValueError("zipf_n must be at least 1")
        if self.num_keys < 1 and self.ops_per_txn > 0:
            raise ValueError("num_keys must be at least 1")
        if self.key_theta < 0:
            raise ValueError("key_theta must be non-negative")

    def replace(self, **kw) -> "GenParams":
        return replace(self, **kw)


# Workload shapes approximating the evaluation's benchmarks.
PRESETS = {
    "rh": dict(read_fraction=0.95),
    "bl": dict(read_fraction=0.5),
    "wh": dict(read_fraction=0.3),
    "hd": dict(read_fraction=0.5, zipf_theta=1.5),
    # UniqueValue read-modify-write, the shape of TPC-C style logs
    "gtpcc": dict(read_fraction=0.5, dup_key_fraction=0.0, rmw=True),
}


def preset(name: str, **overrides) -> GenParams:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return GenParams(**{**base, **overrides})


class ZipfSampler:
    """Values in 1..n with P(k) proportional to 1/k**theta (inverse CDF)."""

    def __init__(self, theta: float, n: int):
        w = 1.0 / np.arange(1, n + 1, dtype=float) ** theta
        self.pmf = w / w.sum()
        self.cdf = np.cumsum(self.pmf)
        self.cdf[-1] = 1.0

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.searchsorted(self.cdf, u, side="right") + 1


def _key_name(i: int) -> str:
    return f"k{i}"


def generate(params: GenParams) -> History:
    p = params
    rng = np.random.default_rng(p.seed)
    zipf = ZipfSampler(p.zipf_theta, p.zipf_n)
    n_dup = int(round(p.dup_key_fraction * p.num_keys))
    # keys below n_dup take Zipf values; the rest get globally unique ones
    dup = np.zeros(p.num_keys, dtype=bool)
    if n_dup:
        dup[rng.choice(p.num_keys, size=n_dup, replace=False)] = True
    next_unique = p.zipf_n + 1
    key_zipf = ZipfSampler(p.key_theta, p.num_keys) if p.key_theta > 0 else None

    store: dict[str, int] = {}
    sessions: list[list[Transaction]] = [[] for _ in range(p.sessions)]
    for j in range(p.txns_per_session):
        for i in range(p.sessions):
            tid = f"s{i}t{j}"
            if key_zipf is None:
                keys = rng.integers(0, p.num_keys, size=p.ops_per_txn)
            else:
                keys = key_zipf.sample(rng, p.ops_per_txn) - 1
            is_read = rng.random(p.ops_per_txn) < p.read_fraction
            ops = []
            local: dict[str, int] = {}
            for k, key_i in enumerate(keys):
                key = _key_name(int(key_i))
                if is_read[k]:
                    val = local.get(key, store.get(key, 0))
                    ops.append(Operation(f"{tid}o{len(ops)}", READ, key, val))
                    continue
                if p.rmw and key not in local:
                    ops.append(Operation(f"{tid}o{len(ops)}", READ, key, store.get(key, 0)))
                if dup[key_i]:
                    val = int(zipf.sample(rng))
                else:
                    val = next_unique
                    next_unique += 1
                local[key] = val
                ops.append(Operation(f"{tid}o{len(ops)}", WRITE, key, val))
            store.update(local)
            if ops:
                sessions[i].append(Transaction(tid, tuple(ops)))
    return _assemble(sessions, {})


def _assemble(sessions, init_values: dict) -> History:
    """Build a History with canonical ids (``s{i}t{j}``, ``...o{k}``)."""
    keys = set(init_values)
    out = []
    for i, sess in enumerate(sessions):
        txns = []
        for j, t in enumerate(sess):
            tid = f"s{i}t{j}"
            ops = tuple(Operation(f"{tid}o{k}", op.kind, op.key, op.value)
                        for k, op in enumerate(t.ops))
            keys.update(op.key for op in ops)
            txns.append(Transaction(tid, ops))
        out.append(tuple(txns))
    init_ops = tuple(Operation(f"{INIT_ID}:{k}", WRITE, k, init_values.get(k, 0))
                     for k in sorted(keys))
    return History(tuple(out), Transaction(INIT_ID, init_ops), frozenset(keys), dict(init_values))


def history_digest(h: History) -> str:
    from .history import serialize_history

    return hashlib.sha256(serialize_history(h).encode()).hexdigest()


def _fresh_key(h: History, stem: str) -> str:
    i = 0
    while f"{stem}{i}" in h.key_universe:
        i += 1
    return f"{stem}{i}"


def _splice(h: History, txns: list[list[tuple]]) -> History:
    """Append each new transaction as its own new session."""
    sessions = [list(s) for s in h.sessions]
    for ops in txns:
        sessions.append([Transaction("_", tuple(Operation("_", k, key, v) for k, key, v in ops))])
    return _assemble(sessions, dict(h.init_values))


def inject_anomaly(h: History, kind: str, seed: int = 0) -> History:
    """Return a copy of ``h`` containing a non-serializable pattern."""
    if len(h) - 1 < 2:
        raise NotApplicable("need at least two transactions")
    rng = np.random.default_rng(seed)
    if kind == STALE_READ:
        return _stale_read(h, rng)
    if kind == LOST_UPDATE:
        x = _fresh_key(h, "lu")
        return _splice(h, [[(READ, x, 0), (WRITE, x, 1)], [(READ, x, 0), (WRITE, x, 2)]])
    if kind == WRITE_SKEW:
        x = _fresh_key(h, "wsx")
        y = _fresh_key(h, "wsy")
        return _splice(h, [[(READ, x, 0), (WRITE, y, 1)], [(READ, y, 0), (WRITE, x, 1)]])
    raise ValueError(f"unknown anomaly {kind!r}")


def _stale_read(h: History, rng: np.random.Generator) -> History:
    """Pick a session where transaction A writes x and a later transaction B
    reads x, and make B's read return the value A overwrote.

    Only values with a single writer are used, so B must read from a
    transaction ordered before A while A precedes B in session order.
    """
    init = dict(h.init_values)
    writers: dict[tuple[str, int], int] = {}
    for t in h.transactions:
        last = {op.key: op.value for op in t.ops if not op.is_read}
        for kv in last.items():
            writers[kv] = writers.get(kv, 0) + 1
    candidates = []
    for si, sess in enumerate(h.sessions):
        for a, ta in enumerate(sess):
            wrote = {op.key for op in ta.ops if not op.is_read}
            for b in range(a + 1, len(sess)):
                seen: set[str] = set()
                for k, op in enumerate(sess[b].ops):
                    if op.key not in seen and op.is_read and op.key in wrote:
                        candidates.append((si, a, b, k, op.key))
                    seen.add(op.key)
    order = rng.permutation(len(candidates))
    for c in order:
        si, a, b, k, key = candidates[c]
        old = _value_before(h, si, a, key, init)
        if writers.get((key, old), 0) != 1:
            continue
        if any(op.value == old for op in h.sessions[si][a].ops
               if not op.is_read and op.key == key):
            continue
        sessions = [list(s) for s in h.sessions]
        tb = sessions[si][b]
        ops = list(tb.ops)
        for m in range(k, len(ops)):
            if ops[m].key != key:
                continue
            if not ops[m].is_read:
                break
            ops[m] = Operation(ops[m].op_id, READ, key, old)
        sessions[si][b] = Transaction(tb.txn_id, tuple(ops))
        return _assemble(sessions, dict(h.init_values))
    raise NotApplicable("no read follows a same-session write of its key")


def _value_before(h: History, si: int, a: int, key: str, init: dict) -> int | None:
    """The value ``sessions[si][a]`` overwrote: its own external read of key,
    else the value visible from the session's previous access, else init."""
    sess = h.sessions[si]
    for op in sess[a].ops:
        if op.key == key:
            if op.is_read:
                return op.value
            break
    for t in reversed(sess[:a]):
        for op in reversed(t.ops):
            if op.key == key:
                return op.value
    return init.get(key, 0)


def random_small_history(rng: np.random.Generator, max_txns: int = 6, max_keys: int = 3,
                         max_ops: int = 4, dup_prob: float = 0.5,
                         max_sessions: int = 3) -> History:
    """A tiny arbitrary (not necessarily serializable) history for oracle tests.

    Reads observe a value some transaction wrote to the key (or the initial
    0); writes reuse an existing value of the key with probability
    ``dup_prob``.  Reads inside a transaction respect Int.
    """
    n_txns = int(rng.integers(1, max_txns + 1))
    n_keys = int(rng.integers(1, max_keys + 1))
    n_sess = int(rng.integers(1, min(max_sessions, n_txns) + 1))
    keys = [f"k{i}" for i in range(n_keys)]
    values: dict[str, list[int]] = {k: [0] for k in keys}
    fresh = 1
    plans = []
    for _ in range(n_txns):
        plan = []
        for _ in range(int(rng.integers(1, max_ops + 1))):
            key = keys[int(rng.integers(n_keys))]
            if rng.random() < 0.5:
                plan.append((READ, key))
            else:
                if rng.random() < dup_prob:
                    v = values[key][int(rng.integers(len(values[key])))]
                else:
                    v = fresh
                    fresh += 1
                values[key].append(v)
                plan.append((WRITE, key, v))
        plans.append(plan)
    sessions: list[list[Transaction]] = [[] for _ in range(n_sess)]
    for plan in plans:
        local: dict[str, int] = {}
        ops = []
        for step in plan:
            if step[0] == READ:
                key = step[1]
                if key in local:
                    v = local[key]
                else:
                    pool = values[key]
                    v = pool[int(rng.integers(len(pool)))]
                local[key] = v
                ops.append(Operation("_", READ, key, v))
            else:
                local[step[1]] = step[2]
                ops.append(Operation("_", WRITE, step[1], step[2]))
        sessions[int(rng.integers(n_sess))].append(Transaction("_", tuple(ops)))
    return _assemble([s for s in sessions if s], {})
