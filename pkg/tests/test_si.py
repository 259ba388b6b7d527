from isochk.hyperpolygraph import RW, WR, WW, Edge
from isochk.si import induced_edges, induced_graph, verify_si
from isochk.verify import VerifyOptions, verify


def test_write_skew(write_skew):
    assert verify_si(write_skew).satisfied is True
    assert verify(write_skew).satisfied is False


def test_lost_update_violates_both(lost_update):
    assert verify_si(lost_update).satisfied is False
    assert verify(lost_update).satisfied is False


def test_si_witness_has_induced_edges(write_skew):
    v = verify_si(write_skew)
    assert v.isolation == "si"
    assert "induced" in v.witness and "edges" in v.witness


def test_induced_edges():
    a = Edge(0, 1, WW, "x")
    r = Edge(1, 2, RW, "y")
    b = Edge(2, 3, WR, "y")
    got = induced_edges([a, r, b])
    assert set(got) == {(a,), (a, r), (b,)}
    g = induced_graph([a, r, b])
    assert {(e.src, e.dst, e.composed) for e in g} == {(0, 1, False), (0, 2, True),
                                                         (2, 3, False)}


def test_two_rw_edges_do_not_compose():
    r1, r2 = Edge(0, 1, RW, "x"), Edge(1, 0, RW, "y")
    assert induced_edges([r1, r2]) == []


def test_si_ablations_agree(write_skew, lost_update, ambiguous, tangled):
    for h in (write_skew, lost_update, ambiguous, tangled):
        base = verify_si(h).satisfied
        for kw in ({"pruning": False}, {"two_width": False}, {"polarity": False},
                   {"baseline": True}):
            assert verify_si(h, VerifyOptions(**kw)).satisfied == base


def test_spliced_write_skew_against_oracles():
    # random small contexts plus a write skew: SI and SER answers diverge often here
    import numpy as np

    from isochk.generator import WRITE_SKEW, inject_anomaly, random_small_history
    from isochk.oracle import oracle_ser_graphs, oracle_si

    rng = np.random.default_rng(9)
    split = 0
    for i in range(150):
        base = random_small_history(rng, max_txns=4)
        if len(base) - 1 < 2:
            continue
        h = inject_anomaly(base, WRITE_SKEW, seed=i)
        ser, si = oracle_ser_graphs(h), oracle_si(h)
        split += ser != si
        for kw in ({}, {"pruning": False}, {"two_width": False}, {"polarity": False},
                   {"baseline": True}):
            assert verify(h, VerifyOptions(**kw)).satisfied == ser
            assert verify_si(h, VerifyOptions(**kw)).satisfied == si
    assert split > 20
