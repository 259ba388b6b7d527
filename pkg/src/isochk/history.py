"""Transaction histories: parsing, validation and per-transaction summaries.

A history is a list of client sessions, each an ordered list of committed
transactions.  A synthetic initial transaction (id ``init``) writes the
starting value of every key and precedes every session.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

INIT_ID = "init"
INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

READ = "r"
WRITE = "w"


class HistoryError(ValueError):
    """Malformed or invalid history input.

    ``path`` points at the offending JSON element, e.g. ``sessions[0][2].ops[1].v``.
    """

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path
        if line is not None:
            where = f"line {line}" + (f", {path}" if path else "")
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Operation:
    op_id: str
    kind: str  # READ or WRITE
    key: str
    value: int

    @property
    def is_read(self) -> bool:
        return self.kind == READ

    def __str__(self) -> str:
        return f"{'R' if self.is_read else 'W'}({self.key},{self.value})"


@dataclass(frozen=True)
class Transaction:
    txn_id: str
    ops: tuple[Operation, ...]

    def __post_init__(self):
        if not self.ops and self.txn_id != INIT_ID:
            raise HistoryError(f"transaction {self.txn_id} has no operations")


@dataclass(frozen=True)
class History:
    sessions: tuple[tuple[Transaction, ...], ...]
    init_txn: Transaction
    key_universe: frozenset[str]
    # Explicit initial values; keys absent here start at 0.
    init_values: Mapping[str, int] = field(default_factory=dict, compare=False)

    @property
    def transactions(self) -> list[Transaction]:
        """All transactions, ``init`` first, then sessions in order."""
        out = [self.init_txn]
        for sess in self.sessions:
            out.extend(sess)
        return out

    @property
    def user_transactions(self) -> list[Transaction]:
        return [t for sess in self.sessions for t in sess]

    def __len__(self) -> int:
        return 1 + sum(len(s) for s in self.sessions)

    def session_order(self) -> set[tuple[str, str]]:
        """Full (transitively closed) session order as id pairs, init included."""
        so = set()
        for sess in self.sessions:
            ids = [t.txn_id for t in sess]
            for i, a in enumerate(ids):
                so.add((INIT_ID, a))
                for b in ids[i + 1:]:
                    so.add((a, b))
        return so


@dataclass(frozen=True)
class Violation:
    """An internal-consistency failure: a read that contradicts an earlier access."""

    txn_id: str
    op_id: str
    key: str
    expected: int
    observed: int

    def to_json(self) -> dict:
        return {"txn": self.txn_id, "op": self.op_id, "key": self.key,
                "expected": self.expected, "observed": self.observed}


@dataclass(frozen=True)
class TxnSummary:
    txn_id: str
    writes: Mapping[str, int]
    external_reads: Mapping[str, int]


@dataclass(frozen=True)
class Summaries:
    """Per-transaction summaries plus the writer/reader indexes per key."""

    by_txn: Mapping[str, TxnSummary]
    write_txns: Mapping[str, tuple[str, ...]]
    read_txns: Mapping[str, tuple[str, ...]]

    def __getitem__(self, txn_id: str) -> TxnSummary:
        return self.by_txn[txn_id]

    def __iter__(self):
        return iter(self.by_txn)

    def __len__(self) -> int:
        return len(self.by_txn)


def txn_id_for(session: int, position: int) -> str:
    return f"s{session}t{position}"


def build_history(sessions: Sequence[Sequence[Sequence[tuple]]],
                  init: Mapping[str, int] | None = None) -> History:
    """Build a history from plain tuples.

    ``sessions[i][j]`` is a list of ``(kind, key, value)`` tuples where kind is
    ``"r"`` or ``"w"``.  Handy for tests and demos.
    """
    doc = {"sessions": [[{"ops": [{"t": k, "k": key, "v": v} for k, key, v in txn]}
                         for txn in sess] for sess in sessions]}
    if init:
        doc["init"] = dict(init)
    return history_from_obj(doc)


def _check_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise HistoryError("expected an integer", path)
    if not INT64_MIN <= value <= INT64_MAX:
        raise HistoryError("value out of 64-bit signed range", path)
    return value


def _check_obj(obj, allowed: set[str], required: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise HistoryError("expected an object", path)
    extra = set(obj) - allowed
    if extra:
        raise HistoryError(f"unknown field(s) {sorted(extra)}", path)
    missing = required - set(obj)
    if missing:
        raise HistoryError(f"missing field(s) {sorted(missing)}", path)


def history_from_obj(doc) -> History:
    """Validate a decoded JSON document and build a :class:`History`."""
    _check_obj(doc, {"init", "sessions"}, {"sessions"}, "")
    init_values: dict[str, int] = {}
    if "init" in doc:
        if not isinstance(doc["init"], dict):
            raise HistoryError("expected an object", "init")
        for k, v in doc["init"].items():
            init_values[k] = _check_int(v, f"init.{k}")
    raw_sessions = doc["sessions"]
    if not isinstance(raw_sessions, list):
        raise HistoryError("expected a list", "sessions")

    seen_op_ids: set[str] = set()
    keys: set[str] = set(init_values)
    sessions = []
    for i, raw_sess in enumerate(raw_sessions):
        spath = f"sessions[{i}]"
        if not isinstance(raw_sess, list):
            raise HistoryError("expected a list of transactions", spath)
        txns = []
        for j, raw_txn in enumerate(raw_sess):
            tpath = f"{spath}[{j}]"
            _check_obj(raw_txn, {"ops", "status"}, {"ops"}, tpath)
            status = raw_txn.get("status", "committed")
            if status != "committed":
                raise HistoryError(f"only committed transactions are accepted, got {status!r}",
                                   f"{tpath}.status")
            raw_ops = raw_txn["ops"]
            if not isinstance(raw_ops, list) or not raw_ops:
                raise HistoryError("expected a non-empty list of operations", f"{tpath}.ops")
            tid = txn_id_for(i, j)
            ops = []
            for k, raw_op in enumerate(raw_ops):
                opath = f"{tpath}.ops[{k}]"
                _check_obj(raw_op, {"t", "k", "v", "id"}, {"t", "k", "v"}, opath)
                kind = raw_op["t"]
                if kind not in (READ, WRITE):
                    raise HistoryError("operation type must be 'r' or 'w'", f"{opath}.t")
                key = raw_op["k"]
                if not isinstance(key, str):
                    raise HistoryError("key must be a string", f"{opath}.k")
                value = _check_int(raw_op["v"], f"{opath}.v")
                if "id" in raw_op:
                    op_id = raw_op["id"]
                    if not isinstance(op_id, str):
                        raise HistoryError("op id must be a string", f"{opath}.id")
                else:
                    op_id = f"{tid}o{k}"
                if op_id in seen_op_ids:
                    raise HistoryError(f"duplicate op id {op_id!r}", f"{opath}.id")
                seen_op_ids.add(op_id)
                keys.add(key)
                ops.append(Operation(op_id, kind, key, value))
            txns.append(Transaction(tid, tuple(ops)))
        sessions.append(tuple(txns))

    init_ops = []
    for key in sorted(keys):
        op_id = f"{INIT_ID}:{key}"
        if op_id in seen_op_ids:
            raise HistoryError(f"op id {op_id!r} collides with the initial transaction")
        init_ops.append(Operation(op_id, WRITE, key, init_values.get(key, 0)))
    # With no keys at all the initial transaction is empty.
    init_txn = Transaction(INIT_ID, tuple(init_ops))
    return History(tuple(sessions), init_txn, frozenset(keys), init_values)


def parse_history(data: bytes | str, format: str = "json") -> History:
    """Parse a history document.  Only ``json`` is supported."""
    if format.lower() != "json":
        raise HistoryError(f"unsupported format {format!r}")
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise HistoryError(f"input is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise HistoryError(exc.msg, line=exc.lineno) from None
    return history_from_obj(doc)


def load_history(path) -> History:
    with open(path, "rb") as fh:
        return parse_history(fh.read())


def history_to_obj(h: History) -> dict:
    doc: dict = {}
    if h.init_values:
        doc["init"] = dict(h.init_values)
    sessions = []
    for i, sess in enumerate(h.sessions):
        txns = []
        for j, txn in enumerate(sess):
            tid = txn_id_for(i, j)
            ops = []
            for k, op in enumerate(txn.ops):
                entry = {"t": op.kind, "k": op.key, "v": op.value}
                if op.op_id != f"{tid}o{k}":
                    entry["id"] = op.op_id
                ops.append(entry)
            txns.append({"ops": ops})
        sessions.append(txns)
    doc["sessions"] = sessions
    return doc


def serialize_history(h: History) -> str:
    return json.dumps(history_to_obj(h), separators=(",", ":"))


def check_int_axiom(h: History) -> list[Violation]:
    """Return every read that disagrees with the latest earlier access to its key
    inside the same transaction."""
    violations = []
    for txn in h.user_transactions:
        last: dict[str, int] = {}
        for op in txn.ops:
            if op.is_read and op.key in last and last[op.key] != op.value:
                violations.append(Violation(txn.txn_id, op.op_id, op.key, last[op.key], op.value))
            last[op.key] = op.value
    return violations


def summarize_txn(txn: Transaction) -> TxnSummary:
    writes: dict[str, int] = {}
    reads: dict[str, int] = {}
    for op in txn.ops:
        if op.is_read:
            if op.key not in writes and op.key not in reads:
                reads[op.key] = op.value
        else:
            writes[op.key] = op.value
    return TxnSummary(txn.txn_id, writes, reads)


def summarize(h: History) -> Summaries:
    by_txn = {}
    write_txns: dict[str, list[str]] = {}
    read_txns: dict[str, list[str]] = {}
    for txn in h.transactions:
        s = summarize_txn(txn)
        by_txn[txn.txn_id] = s
        for key in s.writes:
            write_txns.setdefault(key, []).append(txn.txn_id)
        for key in s.external_reads:
            read_txns.setdefault(key, []).append(txn.txn_id)
    return Summaries(by_txn,
                     {k: tuple(v) for k, v in write_txns.items()},
                     {k: tuple(v) for k, v in read_txns.items()})


def iter_ops(h: History) -> Iterable[tuple[Transaction, Operation]]:
    for txn in h.user_transactions:
        for op in txn.ops:
            yield txn, op
