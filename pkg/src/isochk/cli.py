"""Command-line front end.

Exit codes: 0 satisfied, 1 violated, 2 unknown (timeout), 3 input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .generator import ANOMALIES, PRESETS, GenParams, NotApplicable, generate, inject_anomaly, preset
from .history import HistoryError, load_history, serialize_history
from .oracle import BudgetExceeded, oracle_ser_graphs, oracle_ser_permutation, oracle_si
from .telemetry import STAGES, Telemetry, histogram_csv
from .verify import VerifyOptions, verify

EXIT_OK, EXIT_VIOLATED, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("isochk")


def _exit_code(satisfied) -> int:
    if satisfied is None:
        return EXIT_UNKNOWN
    return EXIT_OK if satisfied else EXIT_VIOLATED


def _options(args) -> VerifyOptions:
    return VerifyOptions(
        isolation=args.isolation,
        pruning=not args.disable_pruning,
        two_width=not args.disable_2width,
        polarity=not args.disable_polarity,
        baseline=args.baseline,
        timeout=args.timeout if args.timeout > 0 else None,
        min_width_debug=args.min_width_debug,
        wr_exclusive=not args.literal_polarity,
    )


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _verify_one(path: str, opts: VerifyOptions) -> tuple[int, dict]:
    try:
        h = load_history(path)
    except (OSError, HistoryError) as exc:
        return EXIT_INPUT, {"input": path, "error": str(exc)}
    v = verify(h, opts)
    d = v.to_json()
    d["input"] = path
    return _exit_code(v.satisfied), d


def _find_cycle(obj):
    """First cycle listed anywhere in a core record."""
    if isinstance(obj, dict):
        if isinstance(obj.get("cycle"), list) and obj["cycle"]:
            return obj["cycle"]
        obj = list(obj.values())
    if isinstance(obj, list):
        for v in obj:
            c = _find_cycle(v)
            if c:
                return c
    return None


def _summary(d: dict) -> str:
    if "error" in d:
        return f"{d['input']}: input error: {d['error']}"
    s = {True: "satisfied", False: "VIOLATED", None: "unknown"}[d["satisfied"]]
    line = f"{d['input']}: {d['isolation'].upper()} {s}"
    cycle = _find_cycle(d.get("core"))
    if cycle:
        line += "\n  cycle: " + "\n         ".join(cycle)
    return line


def _combine(codes: list[int]) -> int:
    for c in (EXIT_INPUT, EXIT_UNKNOWN, EXIT_VIOLATED):
        if c in codes:
            return c
    return EXIT_OK


def _run_many(paths: list[str], opts: VerifyOptions, jobs: int) -> list[tuple[int, dict]]:
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_verify_one, paths, [opts] * len(paths)))
    return [_verify_one(p, opts) for p in paths]


def cmd_verify(args) -> int:
    results = _run_many(args.inputs, _options(args), args.jobs)
    docs = [d for _, d in results]
    if len(docs) == 1:
        text = json.dumps(docs[0], indent=None if args.compact else 2) + "\n"
    else:
        text = "".join(json.dumps(d) + "\n" for d in docs)
    _write(text, args.out)
    if args.stats_out:
        with open(args.stats_out, "w") as fh:
            json.dump([d.get("stats") for d in docs] if len(docs) > 1 else docs[0].get("stats"),
                      fh, indent=2)
    if not args.quiet:
        for d in docs:
            print(_summary(d), file=sys.stderr)
    return _combine([c for c, _ in results])


def cmd_oracle(args) -> int:
    try:
        h = load_history(args.input)
    except (OSError, HistoryError) as exc:
        print(f"{args.input}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.isolation == "si":
        fn = oracle_si
    else:
        fn = oracle_ser_permutation if args.method == "permutation" else oracle_ser_graphs
    try:
        sat = fn(h)
    except BudgetExceeded as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        _write(json.dumps({"isolation": args.isolation, "satisfied": None}) + "\n", args.out)
        return EXIT_UNKNOWN
    _write(json.dumps({"isolation": args.isolation, "satisfied": sat}) + "\n", args.out)
    return _exit_code(sat)


def cmd_gen(args) -> int:
    fields = dict(sessions=args.sessions, txns_per_session=args.txns, ops_per_txn=args.ops,
                  read_fraction=args.read_frac, num_keys=args.keys,
                  dup_key_fraction=args.dup_frac, zipf_theta=args.theta, zipf_n=args.zipf_n,
                  seed=args.seed, rmw=args.rmw, key_theta=args.key_theta)
    given = {k: v for k, v in fields.items() if v is not None}
    try:
        params = preset(args.preset, **given) if args.preset else GenParams(**given)
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INPUT
    h = generate(params)
    if args.inject:
        try:
            h = inject_anomaly(h, args.inject, seed=params.seed)
        except NotApplicable as exc:
            print(f"cannot inject {args.inject}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    _write(serialize_history(h) + "\n", args.out)
    return EXIT_OK


def _stats_table(rows: list[dict]) -> str:
    head = ["input", "txns", "constraints", "after prune", *STAGES,
            "conflicts(H)", "conflicts(-H)"]
    lines = [head]
    for r in rows:
        t = r["timings_us"]
        lines.append([r["input"], str(r["transactions"]), str(r["constraints_before"]),
                      str(r["constraints_after"]),
                      *[f"{t.get(s, 0) / 1000:.1f}ms" for s in STAGES],
                      str(r["conflicts_with_h"]), str(r["conflicts_without_h"])])
    widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in
                               enumerate(zip(row, widths))) for row in lines) + "\n"


def cmd_stats(args) -> int:
    opts = _options(args)
    total = Telemetry()
    rows = []
    codes = []
    for path in args.inputs:
        try:
            h = load_history(path)
        except (OSError, HistoryError) as exc:
            print(f"{path}: input error: {exc}", file=sys.stderr)
            codes.append(EXIT_INPUT)
            continue
        v = verify(h, opts)
        nh = verify(h, opts.replace(polarity=False))
        codes.append(_exit_code(v.satisfied))
        total.merge(v.stats)
        rows.append({
            "input": path,
            "satisfied": v.satisfied,
            "transactions": v.extra.get("transactions", 0),
            "constraints_before": v.extra.get("constraints_before", 0),
            "constraints_after": v.extra.get("constraints_after", 0),
            "timings_us": {s: v.stats.timings.get(s, 0) for s in STAGES},
            "skipped_stages": v.stats.skipped_stages,
            "conflicts_with_h": v.stats.conflicts,
            "conflicts_without_h": nh.stats.conflicts,
            "width_histogram": v.stats.to_json()["width_histogram"],
            "min_cycle_width_histogram": v.stats.to_json()["min_cycle_width_histogram"],
            "pk": {k: getattr(v.stats, k) for k in
                   ("pk_calls", "pk_traversals", "cycles_detected", "reorders")},
        })
    report = {"inputs": rows, "total": total.to_json()}
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(report, fh, indent=2)
    if args.csv:
        hist = total.min_cycle_width_histogram if args.min_width_debug else total.width_histogram
        with open(args.csv, "w") as fh:
            fh.write(histogram_csv(hist))
    text = _stats_table(rows) if rows else ""
    hist = total.width_histogram
    if hist:
        text += "cycle width histogram (found): " + ", ".join(
            f"{w}:{c}" for w, c in sorted(hist.items())) + "\n"
    if total.min_cycle_width_histogram:
        text += "cycle width histogram (minimal): " + ", ".join(
            f"{w}:{c}" for w, c in sorted(total.min_cycle_width_histogram.items())) + "\n"
    text += (f"pk: calls={total.pk_calls} traversals={total.pk_traversals} "
             f"cycles={total.cycles_detected} reorders={total.reorders}\n")
    _write(text, args.out)
    return _combine(codes)


def _add_verify_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--isolation", choices=("ser", "si"), default="ser")
    p.add_argument("--disable-pruning", action="store_true", help="skip the pruning fixpoint")
    p.add_argument("--disable-2width", action="store_true", help="skip 2-width cycle clauses")
    p.add_argument("--disable-polarity", action="store_true",
                   help="use the default saved-phase polarity instead of the order heuristic")
    p.add_argument("--literal-polarity", action="store_true",
                   help="order heuristic without the WR sibling guard")
    p.add_argument("--baseline", action="store_true",
                   help="plain encoding with RW variables (implies the three --disable flags)")
    p.add_argument("--timeout", type=float, default=600.0, help="seconds; 0 for none")
    p.add_argument("--min-width-debug", action="store_true",
                   help="also record a minimum-width cycle per conflict")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isochk", description="Check transaction histories "
                                 "against serializability or snapshot isolation.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("verify", help="verify one or more history files")
    p.add_argument("inputs", nargs="+")
    _add_verify_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for several inputs")
    p.add_argument("--stats-out", help="write the stats record(s) to this file")
    p.add_argument("--compact", action="store_true", help="single-line JSON")
    p.add_argument("-q", "--quiet", action="store_true", help="no summary on stderr")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a serializable history")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--sessions", type=int)
    p.add_argument("--txns", type=int, help="transactions per session")
    p.add_argument("--ops", type=int, help="operations per transaction")
    p.add_argument("--read-frac", type=float)
    p.add_argument("--keys", type=int)
    p.add_argument("--dup-frac", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--zipf-n", type=int)
    p.add_argument("--key-theta", type=float,
                   help="Zipf skew of key access (default 0, uniform)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rmw", action="store_true", default=None,
                   help="read every key before writing it")
    p.add_argument("--inject", choices=ANOMALIES, help="splice in an anomaly")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="brute-force check of a tiny history")
    p.add_argument("input")
    p.add_argument("--isolation", choices=("ser", "si"), default="ser")
    p.add_argument("--method", choices=("graphs", "permutation"), default="graphs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="conflict and cycle-width statistics")
    p.add_argument("inputs", nargs="+")
    _add_verify_flags(p)
    p.add_argument("--json-out", help="write the full report as JSON")
    p.add_argument("--csv", help="write the width histogram as CSV")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("ISOCHK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
