"""End-to-end verification: construct, prune, encode, solve."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

from .encode import DEFAULT_PAIR_BUDGET, encode, encode_baseline
from .history import History, check_int_axiom
from .hyperpolygraph import NoWriterError, compatible_ok, construct, rw_closure
from .prune import SER, SI, KnownCycleError, KnownGraph, PruneViolation, prune
from .solver import SolveOptions, Verdict, graph_acyclic, solve, witness_json
from .telemetry import Telemetry

log = logging.getLogger(__name__)

ISOLATIONS = (SER, SI)


@dataclass(frozen=True)
class VerifyOptions:
    isolation: str = SER
    pruning: bool = True
    two_width: bool = True
    polarity: bool = True
    # plain encoding with RW variables; implies no pruning, 2-width or polarity
    baseline: bool = False
    timeout: float | None = 600.0
    min_width_debug: bool = False
    wr_exclusive: bool = True
    pair_budget: int | None = DEFAULT_PAIR_BUDGET

    def replace(self, **kw) -> "VerifyOptions":
        return dataclasses.replace(self, **kw)

    def effective(self) -> "VerifyOptions":
        if self.isolation not in ISOLATIONS:
            raise ValueError(f"unknown isolation level {self.isolation!r}")
        if self.baseline:
            return self.replace(pruning=False, two_width=False, polarity=False)
        return self


def verify(h: History, opts: VerifyOptions | None = None) -> Verdict:
    opts = (opts or VerifyOptions()).effective()
    stats = Telemetry()
    iso = opts.isolation
    extra: dict = {"transactions": len(h) - 1}

    def done(v: Verdict) -> Verdict:
        v.extra.update(extra)
        return v

    bad = check_int_axiom(h)
    if bad:
        return done(Verdict(iso, False, core={"int_violations": [b.to_json() for b in bad]},
                            stats=stats))

    with stats.stage("construct"):
        try:
            hp = construct(h)
        except NoWriterError as exc:
            hp = None
            core = {"no_writer": {"txn": exc.reader, "key": exc.key, "value": exc.value}}
    if hp is None:
        return done(Verdict(iso, False, core=core, stats=stats))
    extra["constraints_before"] = hp.num_constraints()
    original = hp

    known = None
    if opts.baseline:
        stats.skip("prune")
    else:
        with stats.stage("prune"):
            if opts.pruning:
                res = prune(hp, iso)
                if isinstance(res, PruneViolation):
                    stats.prune_passes = res.stats.passes
                    extra["prune"] = res.stats.to_json()
                    return done(Verdict(iso, False, core={res.kind: res.witness}, stats=stats))
                hp, known = res.hp, res.known
                stats.prune_passes = res.stats.passes
                extra["prune"] = res.stats.to_json()
            else:
                known = KnownGraph(hp.n, hp.known_edges, iso)
                try:
                    known.refresh()
                except KnownCycleError as exc:
                    return done(Verdict(iso, False, stats=stats, core={
                        "KnownCycle": {"cycle": [hp.edge_str(e) for e in exc.cycle]}}))
        if not opts.pruning:
            stats.skip("prune")
    extra["constraints_after"] = hp.num_constraints()

    if hp.num_constraints() == 0 and not opts.baseline:
        # Everything is decided: the known graph (acyclic, checked above) is the witness.
        stats.skip("encode")
        stats.skip("solve")
        g = rw_closure(hp.known_edges)
        if not compatible_ok(g, original) or not graph_acyclic(hp.n, g, iso):
            raise AssertionError("fully pruned graph fails the witness audit")
        return done(Verdict(iso, True, witness=witness_json(hp, g, iso), stats=stats, graph=g))

    with stats.stage("encode"):
        if opts.baseline:
            cnf = encode_baseline(hp)
        else:
            cnf = encode(hp, known if opts.two_width else None, two_width=opts.two_width,
                         pair_budget=opts.pair_budget)
    extra["num_vars"] = cnf.num_vars
    extra["num_clauses"] = len(cnf.clauses)
    extra["two_width_clauses"] = cnf.two_width_clause_count
    if cnf.two_width_skipped:
        extra["two_width_skipped"] = True

    with stats.stage("solve"):
        v = solve(cnf, hp, SolveOptions(iso, opts.polarity, opts.timeout, opts.min_width_debug,
                                           opts.wr_exclusive),
                  stats=stats, known=known, original=original)
    return done(v)
