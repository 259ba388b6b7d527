"""Acceptance criteria, one test each.

Every test prints ``criterion N: PASS|FAIL ...`` with the measured numbers,
whether or not it passes.  Run with ``pytest tests/test_acceptance.py -v``.
"""
import json
import os
import random
import resource
import statistics
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from conftest import TANGLED, AMBIGUOUS, WRITE_SKEW
from isochk.generator import GenParams, generate, preset, random_small_history
from isochk.history import build_history, serialize_history
from isochk.oracle import oracle_ser_graphs, oracle_ser_permutation, oracle_si
from isochk.si import verify_si
from isochk.solver.theory import TEdge, TheoryGraph
from isochk.verify import VerifyOptions, verify

SUITE_SIZE = 2000
SUITE_SEED = 2024


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_golden_verdicts():
    times = []
    verdicts = []
    for sess in (AMBIGUOUS, TANGLED):
        h = build_history(sess)
        t0 = time.perf_counter()
        verdicts.append(verify(h).satisfied)
        times.append(time.perf_counter() - t0)
    ok = verdicts == [True, False] and max(times) < 0.1
    report(1, ok, f"ambiguous={verdicts[0]} tangled={verdicts[1]} "
                  f"times_ms={[round(t * 1000, 2) for t in times]} (limit 100)")
    assert ok


@pytest.fixture(scope="module")
def suite():
    """The seeded small-history suite with oracle verdicts."""
    rng = np.random.default_rng(SUITE_SEED)
    t0 = time.perf_counter()
    out = []
    for _ in range(SUITE_SIZE):
        h = random_small_history(rng, max_txns=6, max_keys=3, max_ops=4, dup_prob=0.5)
        out.append((h, oracle_ser_graphs(h), oracle_ser_permutation(h), oracle_si(h)))
    return out, time.perf_counter() - t0


def _disagreements(suite, opts):
    ser_bad = si_bad = 0
    for h, ser, _, si in suite:
        if verify(h, opts).satisfied != ser:
            ser_bad += 1
        if verify(h, opts.replace(isolation="si")).satisfied != si:
            si_bad += 1
    return ser_bad, si_bad


def test_criterion_02_oracle_equivalence(suite):
    hs, oracle_time = suite
    t0 = time.perf_counter()
    bad_ser = bad_si = oracle_split = 0
    n_ser = n_si = 0
    for h, ser_g, ser_p, si in hs:
        oracle_split += ser_g != ser_p
        bad_ser += verify(h).satisfied != ser_g
        bad_si += verify_si(h).satisfied != si
        n_ser += ser_g
        n_si += si
    total = oracle_time + time.perf_counter() - t0
    ok = bad_ser == bad_si == oracle_split == 0 and total < 300
    report(2, ok, f"{len(hs)} histories ({n_ser} SER, {n_si} SI satisfiable): "
                  f"solver/oracle SER mismatches={bad_ser}, SI mismatches={bad_si}, "
                  f"oracle split={oracle_split}, total {total:.1f}s (limit 300)")
    assert ok


@pytest.mark.parametrize("n, flag, opts", [
    (3, "pruning disabled", VerifyOptions(pruning=False)),
    (4, "2-width disabled", VerifyOptions(two_width=False)),
    (5, "polarity disabled", VerifyOptions(polarity=False)),
])
def test_criteria_03_to_05_ablation_safety(suite, n, flag, opts):
    hs, _ = suite
    ser_bad, si_bad = _disagreements(hs, opts)
    ok = ser_bad == si_bad == 0
    report(n, ok, f"{flag}: {len(hs)} histories, SER mismatches={ser_bad}, "
                  f"SI mismatches={si_bad}")
    assert ok


def _conflicts(params, opts):
    v = verify(generate(params), opts)
    assert v.satisfied is True
    return v.stats.conflicts


ONE_K = dict(sessions=20, txns_per_session=50)


def test_criterion_06_conflict_reduction():
    with_h = VerifyOptions()
    without_h = VerifyOptions(polarity=False)
    literal_h = VerifyOptions(wr_exclusive=False)
    wh = [preset("wh", seed=s, **ONE_K) for s in range(10)]
    hd = [preset("hd", seed=s, **ONE_K) for s in range(10)]
    wh_h = [_conflicts(p, with_h) for p in wh]
    wh_n = [_conflicts(p, without_h) for p in wh]
    hd_h = [_conflicts(p, with_h) for p in hd]
    hd_n = [_conflicts(p, without_h) for p in hd]
    hd_lit = [_conflicts(p, literal_h) for p in hd]
    wins = sum(a < b for a, b in zip(hd_h, hd_n))
    lit_wins = sum(a < b for a, b in zip(hd_lit, hd_n))
    ok = statistics.median(wh_h) <= statistics.median(wh_n) and wins >= 7
    report(6, ok, f"WH median conflicts with H {statistics.median(wh_h)} vs without "
                  f"{statistics.median(wh_n)}; HD reduced in {wins}/10 seeds "
                  f"(with {hd_h}, without {hd_n}); literal H without the WR guard "
                  f"reduces in {lit_wins}/10 ({hd_lit})")
    assert ok


def test_criterion_07_width_two_dominates():
    opts = VerifyOptions(two_width=False, polarity=False, min_width_debug=True)
    runs = []
    for s in range(10):
        st = verify(generate(preset("bl", seed=s, **ONE_K)), opts).stats
        runs.append((st.conflicts, st.min_cycle_width_histogram, st.width_histogram))
    qualifying = [r for r in runs if r[0] >= 20]
    modes = [max(r[1], key=lambda w: (r[1][w], -w)) for r in qualifying]
    found_modes = [max(r[2], key=lambda w: (r[2][w], -w)) for r in qualifying]
    ok = bool(qualifying) and all(m == 2 for m in modes)
    report(7, ok, f"{len(qualifying)}/10 runs with >=20 conflicts; minimal-width modes "
                  f"{modes}; found-width modes {found_modes}")
    assert ok


def test_criterion_08_full_prunability_bypass():
    v = verify(generate(preset("gtpcc", seed=3)))
    t = v.to_json()["stats"]
    skipped = set(t["skipped_stages"])
    ok = (v.satisfied is True and t["constraints_before"] > 0 and t["constraints_after"] == 0
          and {"encode", "solve"} <= skipped and t["timings_us"]["solve"] == 0
          and t["timings_us"]["encode"] == 0)
    report(8, ok, f"constraints {t['constraints_before']} -> {t['constraints_after']}, "
                  f"skipped {sorted(skipped)}, timings_us {t['timings_us']}")
    assert ok


def test_criterion_09_write_skew():
    h = build_history(WRITE_SKEW)
    si, ser = verify_si(h).satisfied, verify(h).satisfied
    ok = si is True and ser is False and oracle_si(h) and not oracle_ser_graphs(h)
    report(9, ok, f"SI satisfied={si}, SER satisfied={ser}")
    assert ok


def test_criterion_10_scale(tmp_path):
    params = GenParams(txns_per_session=500, seed=0)
    assert params.sessions * params.txns_per_session == 10_000 and params.num_keys == 5000
    path = tmp_path / "h10k.json"
    path.write_text(serialize_history(generate(params)))
    before = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    t0 = time.perf_counter()
    r = subprocess.run([sys.executable, "-m", "isochk", "verify", "-q", "--isolation", "ser",
                        str(path)], capture_output=True, text=True)
    wall = time.perf_counter() - t0
    peak_kb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    sat = json.loads(r.stdout)["satisfied"] if r.stdout else None
    mem_gb = max(peak_kb, before) / 2**20
    ok = r.returncode == 0 and sat is True and wall <= 60 and mem_gb <= 2
    report(10, ok, f"10k txns/5k keys: satisfied={sat}, {wall:.1f}s (limit 60), "
                   f"peak RSS {mem_gb:.2f} GB (limit 2), cpus={os.cpu_count()}")
    assert ok


def _acyclic(n, edges):
    indeg = [0] * n
    succ = [[] for _ in range(n)]
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    todo = [u for u in range(n) if not indeg[u]]
    seen = 0
    while todo:
        u = todo.pop()
        seen += 1
        for w in succ[u]:
            indeg[w] -= 1
            if not indeg[w]:
                todo.append(w)
    return seen == n


def test_criterion_11_pk_fuzz():
    rng = random.Random(11)
    n = 60
    g = TheoryGraph(n)
    ops = inserts = cycles = order_bad = missed = false_cycles = 0
    while ops < 100_000:
        for _ in range(100):
            r = rng.random()
            if r < 0.1:
                g.push_level()
            elif r < 0.15 and g.level:
                g.backtrack(rng.randrange(g.level))
            else:
                a, b = rng.randrange(n), rng.randrange(n)
                cyc = g.insert(TEdge(a, b, ()))
                inserts += 1
                if cyc is not None:
                    cycles += 1
                    # a reported cycle must be real: new edge plus present edges
                    closed = all(cyc[i].dst == cyc[(i + 1) % len(cyc)].src
                                 for i in range(len(cyc)))
                    if not closed or not all(e in g.out[e.src] for e in cyc[1:]):
                        false_cycles += 1
            ops += 1
        edges = [(e.src, e.dst) for e in g.stack]
        if not _acyclic(n, edges):
            missed += 1
        order_bad += not g.order_ok()
    ok = order_bad == missed == false_cycles == 0
    report(11, ok, f"{ops} ops ({inserts} inserts, {cycles} cycles): order violations="
                   f"{order_bad}, missed cycles={missed}, bogus cycles={false_cycles}")
    assert ok
