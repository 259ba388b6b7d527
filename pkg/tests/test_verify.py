import numpy as np
import pytest

from isochk.generator import random_small_history
from isochk.history import build_history
from isochk.hyperpolygraph import compatible_ok, construct
from isochk.oracle import oracle_ser_graphs, oracle_si
from isochk.verify import VerifyOptions, verify

ABLATIONS = {
    "full": VerifyOptions(),
    "no-pruning": VerifyOptions(pruning=False),
    "no-2width": VerifyOptions(two_width=False),
    "no-polarity": VerifyOptions(polarity=False),
    "literal-polarity": VerifyOptions(wr_exclusive=False),
    "baseline": VerifyOptions(baseline=True),
}


@pytest.mark.parametrize("name", ABLATIONS)
def test_small_histories(ambiguous, tangled, name):
    opts = ABLATIONS[name]
    v = verify(ambiguous, opts)
    assert v.satisfied is True
    assert v.witness["version_order"]["x"][0] == "init"
    assert verify(tangled, opts).satisfied is False


def test_witness_is_audited(ambiguous):
    v = verify(ambiguous)
    assert compatible_ok(v.graph, construct(ambiguous))
    reads = v.witness["reads_from"]
    assert reads == [{"reader": "s1t1", "key": "x", "writer": "s1t0"}]


def test_int_violation_reported():
    v = verify(build_history([[[("w", "x", 1), ("r", "x", 2)]]]))
    assert v.satisfied is False
    assert "int_violations" in v.core


def test_no_writer_reported():
    v = verify(build_history([[[("r", "x", 9)]]]))
    assert v.satisfied is False
    assert v.core["no_writer"] == {"txn": "s0t0", "key": "x", "value": 9}


def test_unsat_core_from_solver():
    # two readers disagree on the order of two writers; needs the solver
    h = build_history([
        [[("w", "x", 1)]], [[("w", "x", 2)]],
        [[("r", "x", 1), ("r", "x", 1)], [("r", "x", 2)]],
        [[("r", "x", 2)], [("r", "x", 1)]],
    ])
    for name, opts in ABLATIONS.items():
        v = verify(h, opts)
        assert v.satisfied is False, name
        assert v.core


def test_unknown_isolation():
    with pytest.raises(ValueError):
        verify(build_history([[[("w", "x", 1)]]]), VerifyOptions(isolation="rc"))


def test_timeout_gives_unknown(ambiguous):
    v = verify(ambiguous, VerifyOptions(timeout=0.0))
    assert v.satisfied is None
    assert v.to_json()["stats"]["timeout"] is True
    assert verify(ambiguous, VerifyOptions(timeout=None)).satisfied is True


def test_random_small_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(150):
        h = random_small_history(rng)
        assert verify(h).satisfied == oracle_ser_graphs(h)
        assert verify(h, VerifyOptions(isolation="si")).satisfied == oracle_si(h)


def test_stages_recorded(ambiguous):
    t = verify(ambiguous).stats.to_json()["timings_us"]
    assert set(t) >= {"construct", "prune", "encode", "solve"}
