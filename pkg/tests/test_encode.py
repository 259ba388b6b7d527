from isochk.encode import (encode, encode_baseline, lit_is_neg, lit_var, neg, normalize_clause,
                           pos)
from isochk.hyperpolygraph import RW, construct
from isochk.prune import prune


def test_literals():
    assert lit_var(pos(3)) == 3 and not lit_is_neg(pos(3))
    assert lit_var(neg(3)) == 3 and lit_is_neg(neg(3))
    assert normalize_clause([pos(1), pos(1), neg(2)]) == (pos(1), neg(2))
    assert normalize_clause([pos(1), neg(1)]) is None


def test_ambiguous_encoding(ambiguous):
    res = prune(construct(ambiguous))
    cnf = encode(res.hp, res.known)
    got = {cnf.clause_str(c) for c in cnf.clauses}
    assert got == {
        "WW^x[s0t0,s1t0] | WW^x[s1t0,s0t0]",
        "~WW^x[s0t0,s1t0] | ~WW^x[s1t0,s0t0]",
        "WR^x[s0t0,s1t1] | WR^x[s1t0,s1t1]",
        # WW(s0t0,s1t0) with WR(s0t0,s1t1) derives RW(s1t1,s1t0), closing a cycle with SO
        "~WW^x[s0t0,s1t0] | ~WR^x[s0t0,s1t1]",
    }
    assert cnf.two_width_clause_count == 1


def test_without_two_width(ambiguous):
    res = prune(construct(ambiguous))
    cnf = encode(res.hp, None, two_width=False)
    assert cnf.two_width_clause_count == 0
    assert len(cnf.clauses) == 3


def test_baseline_has_rw_vars(ambiguous):
    cnf = encode_baseline(construct(ambiguous))
    assert any(e.kind == RW for e in cnf.vars)
    strs = {cnf.clause_str(c) for c in cnf.clauses}
    # WR is exactly-one in the baseline
    assert "~WR^x[s0t0,s1t1] | ~WR^x[s1t0,s1t1]" in strs


def test_dimacs(ambiguous):
    res = prune(construct(ambiguous))
    cnf = encode(res.hp, res.known)
    lines = cnf.to_dimacs().splitlines()
    header = [l for l in lines if l.startswith("p ")]
    assert header == [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    body = [l for l in lines if l and l[0] not in "pc"]
    assert all(l.endswith(" 0") for l in body)
