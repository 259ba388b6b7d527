import time

from isochk.solver.theory import TEdge
from isochk.telemetry import STAGES, Telemetry, cycle_width, histogram_csv
from isochk.verify import VerifyOptions, verify


def test_cycle_width_counts_each_variable_once():
    cyc = [TEdge(0, 1, (4,)), TEdge(1, 2, (4, 7)), TEdge(2, 0, ())]
    assert cycle_width(cyc) == 2
    assert cycle_width([TEdge(0, 1, ()), TEdge(1, 0, ())]) == 0
    assert cycle_width([TEdge(0, 0, (3,))]) == 1


def test_histogram_and_mode():
    t = Telemetry()
    for w in (2, 2, 3, 1, 2):
        t.record_width(w, minimal=w)
    assert t.width_histogram == {1: 1, 2: 3, 3: 1}
    assert t.min_cycle_width_histogram == {1: 1, 2: 3, 3: 1}
    assert t.modal_width() == 2
    assert histogram_csv(t.width_histogram) == "width,count\n1,1\n2,3\n3,1\n"


def test_stage_timer_accumulates():
    t = Telemetry()
    with t.stage("prune"):
        time.sleep(0.002)
    with t.stage("prune"):
        pass
    assert t.timings["prune"] >= 2000
    t.skip("solve")
    assert t.to_json()["timings_us"]["solve"] == 0
    assert t.skipped_stages == ["solve"]


def test_json_round_trip_and_merge():
    t = Telemetry(conflicts=3, pk_calls=10, pk_traversals=4, cycles_detected=2)
    t.record_width(2)
    back = Telemetry.from_json(t.to_json())
    assert back.to_json() == t.to_json()
    back.merge(t)
    assert back.conflicts == 6 and back.width_histogram == {2: 2}
    assert list(t.to_json()["timings_us"]) == list(STAGES)


def test_counter_invariants_after_solving(ambiguous):
    from isochk.generator import GenParams, generate
    h = generate(GenParams(sessions=5, txns_per_session=20, ops_per_txn=6, num_keys=20,
                           zipf_n=4, seed=2))
    st = verify(h, VerifyOptions(two_width=False)).stats
    assert st.consistent()
    assert st.cycles_detected <= st.pk_traversals <= st.pk_calls
    assert sum(st.width_histogram.values()) == st.theory_conflicts
