import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isochk.history import (INIT_ID, HistoryError, build_history, check_int_axiom,
                            history_to_obj, load_history, parse_history, serialize_history,
                            summarize)


def test_ids_and_init(ambiguous):
    ids = [t.txn_id for t in ambiguous.transactions]
    assert ids == [INIT_ID, "s0t0", "s1t0", "s1t1"]
    assert len(ambiguous) == 4
    assert ambiguous.key_universe == {"x"}
    assert [(op.key, op.value) for op in ambiguous.init_txn.ops] == [("x", 0)]


def test_explicit_init_values():
    h = parse_history('{"init": {"x": 7}, "sessions": [[{"ops": [{"t":"r","k":"x","v":7}]}]]}')
    assert dict(h.init_values) == {"x": 7}
    assert [op.value for op in h.init_txn.ops] == [7]
    assert check_int_axiom(h) == []


def test_summary_keeps_last_write_and_first_external_read():
    h = build_history([[[("r", "x", 0), ("w", "x", 1), ("r", "x", 1), ("w", "x", 2),
                         ("w", "y", 5)]]])
    s = summarize(h)["s0t0"]
    assert s.external_reads == {"x": 0}
    assert s.writes == {"x": 2, "y": 5}


@pytest.mark.parametrize("ops, bad", [
    ([("w", "x", 1), ("r", "x", 1)], False),
    ([("w", "x", 1), ("r", "x", 2)], True),
    ([("r", "x", 0), ("r", "x", 0)], False),
    ([("r", "x", 0), ("r", "x", 3)], True),
])
def test_int_axiom(ops, bad):
    h = build_history([[ops]])
    assert bool(check_int_axiom(h)) == bad


@pytest.mark.parametrize("text", [
    "{",
    "[]",
    '{"sessions": [[{"ops": []}]]}',
    '{"sessions": [[{"ops": [{"t":"x","k":"a","v":1}]}]]}',
    '{"sessions": [[{"ops": [{"t":"r","k":1,"v":1}]}]]}',
    '{"sessions": [[{"ops": [{"t":"r","k":"a","v":1.5}]}]]}',
    '{"sessions": [[{"ops": [{"t":"r","k":"a","v":true}]}]]}',
    '{"sessions": [[{"ops": [{"t":"r","k":"a","v":9223372036854775808}]}]]}',
    '{"sessions": [[{"ops": [{"t":"r","k":"a","v":1}], "status": "aborted"}]]}',
])
def test_rejects_malformed(text):
    with pytest.raises(HistoryError):
        parse_history(text)


def test_load_reports_path(tmp_path):
    p = tmp_path / "h.json"
    p.write_text('{"sessions": [[{"ops": [{"t":"r","k":"a","v":"no"}]}]]}')
    with pytest.raises(HistoryError, match=r"sessions\[0\]\[0\]\.ops\[0\]\.v"):
        load_history(p)


ops = st.tuples(st.sampled_from("rw"), st.sampled_from(["x", "y", "z"]),
                st.integers(-2**63, 2**63 - 1))
sessions = st.lists(st.lists(st.lists(ops, min_size=1, max_size=4), max_size=3),
                    min_size=1, max_size=3)


@settings(max_examples=200, deadline=None)
@given(sessions, st.dictionaries(st.sampled_from(["x", "y"]), st.integers(-5, 5)))
def test_round_trip(sess, init):
    h = build_history(sess, init)
    again = parse_history(serialize_history(h))
    assert again == h
    assert dict(again.init_values) == dict(h.init_values)
    assert json.loads(serialize_history(again)) == history_to_obj(h)
