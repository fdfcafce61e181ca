"""Command-line front end: ``maccache {rates,sweep,schedule,verify,envelope}``.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis
from .decoder import lemma_decode_map
from .delivery import build_schedule, format_schedule, schedule_to_json
from .harness import end_to_end, randomized_trials
from .params import (
    InvalidDemands,
    InvalidParams,
    SystemParams,
    check_demands,
    default_demands,
    worst_case_demands,
)
from .placement import place

OUTPUT_DIR_ENV = "MACCACHE_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def fmt_rational(x: Fraction) -> str:
    return str(Fraction(x))


def fmt_approx(x: Fraction) -> str:
    s = f"{float(x):.6f}".rstrip("0").rstrip(".")
    return s or "0"


def fmt_both(x: Fraction) -> str:
    return f"{fmt_rational(x)} ({fmt_approx(x)})"


def _params(args) -> SystemParams:
    N = args.files if args.files is not None else args.users
    return SystemParams(N, args.users, args.cache_subfiles, args.access)


def _demands(args, params: SystemParams) -> tuple[int, ...]:
    if args.demands:
        try:
            raw = [int(x) for x in args.demands.split(",") if x.strip()]
        except ValueError:
            raise InvalidDemands(f"cannot parse demand list {args.demands!r}") from None
        return check_demands(raw, params)
    if args.worst:
        return worst_case_demands(params, args.seed)
    return default_demands(params)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_rates(args) -> int:
    p = _params(args)
    K, k, z = p.K, p.k, p.z
    r_new, r_ic = analysis.rate_new(K, k, z), analysis.rate_ic(K, k, z)
    r_lb = analysis.rate_lb(K, z, p.gamma) if 2 * z >= K else None
    sp_max, sp_lcm = analysis.subpacketization_new(K, k, z)
    try:
        sp_ic = analysis.subpacketization_ic(K, k, z)
    except InvalidParams:
        sp_ic = None
    if args.format == "json":
        doc = {
            "K": K, "k": k, "z": z, "gamma": str(p.gamma),
            "rate_new": str(r_new), "rate_ic": str(r_ic),
            "rate_lb": None if r_lb is None else str(r_lb),
            "subpack_new_max": sp_max, "subpack_new_lcm": sp_lcm, "subpack_ic": sp_ic,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    if args.format == "csv":
        _emit(analysis.rows_to_csv([analysis.sweep_row(K, k, z)]), args.out)
        return EXIT_OK
    lines = [
        f"K = {K}, k = {k}, z = {z}",
        f"gamma = {fmt_both(p.gamma)}",
        f"R_new = {fmt_both(r_new)}",
        f"R_ic = {fmt_both(r_ic)}",
        f"R_lb = {fmt_both(r_lb)}" if r_lb is not None else "R_lb = n/a (requires z >= K/2)",
        f"subpacketization_new = {sp_max} (max per round), {sp_lcm} (lcm over rounds)",
        f"subpacketization_ic = {sp_ic if sp_ic is not None else 'n/a'}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    K = args.users
    ks = [args.cache_subfiles] if args.cache_subfiles is not None else None
    zs = [args.access] if args.access is not None else None
    rows = analysis.sweep(K, ks, zs)
    if args.format == "json":
        doc = [
            {
                "K": r.K, "k": r.k, "z": r.z, "gamma": str(r.gamma),
                "rate_new": str(r.rate_new), "rate_ic": str(r.rate_ic),
                "rate_lb": None if r.rate_lb is None else str(r.rate_lb),
                "subpack_new_max": r.subpack_new_max, "subpack_new_lcm": r.subpack_new_lcm,
                "subpack_ic": r.subpack_ic,
            }
            for r in rows
        ]
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(analysis.rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_schedule(args) -> int:
    p = _params(args)
    d = _demands(args, p)
    schedule = build_schedule(p, d)
    if args.format == "json":
        _emit(schedule_to_json(schedule) + "\n", args.out)
        return EXIT_OK
    text = format_schedule(schedule)
    if args.placement:
        text = "".join(line + "\n" for line in place(p).lines()) + text
    if not schedule.rounds:
        print("no transmissions required", file=sys.stderr)
    _emit(text, args.out)
    return EXIT_OK


def decode_table(params: SystemParams, demands) -> list[tuple[int, int, int, str]]:
    """Rows (user, sub-file, part, source symbol) for every user's missing parts."""
    if params.deficit <= 0:
        return []
    schedule = build_schedule(params, demands)
    rows = []
    for alpha in range(params.K):
        rows.extend(lemma_decode_map(alpha, params).rows(schedule))
    return rows


def cmd_verify(args) -> int:
    p = _params(args)
    d = _demands(args, p)
    report = end_to_end(p, d, args.seed, args.scale)
    table = decode_table(p, d)
    trials = randomized_trials(p, args.trials, args.seed, args.scale) if args.trials else None
    ok = report.ok and (trials is None or (trials.failures == 0 and trials.rate_mismatches == 0))

    if args.format == "json":
        doc = {
            "params": {"N": p.N, "K": p.K, "k": p.k, "z": p.z},
            "demands": list(d),
            "per_user_success": report.per_user_success,
            "measured_rate": str(report.measured_rate),
            "formula_rate": str(report.formula_rate),
            "symbols_sent": report.symbols_sent,
            "bytes_sent": report.bytes_sent,
            "file_size": report.file_size,
            "failures": [{"user": f.user, "detail": f.detail} for f in report.failures],
            "decode_table": [
                {"user": u, "subfile": sub, "part": pt, "source": src} for u, sub, pt, src in table
            ],
            "ok": ok,
        }
        if trials is not None:
            doc["trials"] = {
                "trials": trials.trials,
                "failures": trials.failures,
                "rate_mismatches": trials.rate_mismatches,
                "distinct_demand_vectors_tested": trials.distinct_demand_vectors_tested,
            }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK if ok else EXIT_FAIL

    out = io.StringIO()
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["user", "subfile", "part", "source"])
        w.writerows(table)
        _emit(out.getvalue(), args.out)
        return EXIT_OK if ok else EXIT_FAIL

    print(f"instance: {p}  demands: {','.join(map(str, d))}", file=out)
    if table:
        print(f"{'user':<6}{'sub-file':<12}{'part':<14}source", file=out)
        for u, sub, pt, src in table:
            f = d[u]
            print(f"{'U' + str(u):<6}{f'W[{sub}]^{f}':<12}{f'W[{sub},{pt}]^{f}':<14}{src}", file=out)
    else:
        print("no transmissions required; every user reads its file from cache", file=out)
    decoded = sum(report.per_user_success)
    print(f"users decoded: {decoded}/{p.K}", file=out)
    for fail in report.failures:
        print(f"  FAIL U{fail.user}: {fail.detail}", file=out)
    print(f"symbols sent: {report.symbols_sent}, bytes sent: {report.bytes_sent}, file size: {report.file_size}",
          file=out)
    print(f"measured rate: {fmt_both(report.measured_rate)}  formula rate: {fmt_both(report.formula_rate)}",
          file=out)
    if trials is not None:
        print(f"randomized trials: {trials.trials}, failures: {trials.failures}, "
              f"rate mismatches: {trials.rate_mismatches}, "
              f"distinct demand vectors: {trials.distinct_demand_vectors_tested}", file=out)
    print("OK" if ok else "FAILED", file=out)
    _emit(out.getvalue(), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_envelope(args) -> int:
    K, z = args.users, args.access
    if z is None:
        raise InvalidParams("envelope needs --access")
    SystemParams(K, K, 1, z)
    pts = analysis.envelope_points(K, z)
    vertices = set(analysis.convex_envelope(pts))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "gamma", "rate", "gamma_exact", "rate_exact", "hull_vertex"])
    for pt in pts:
        k = pt.gamma * K
        w.writerow([int(k), analysis.fmt_decimal(pt.gamma), analysis.fmt_decimal(pt.rate),
                    str(pt.gamma), str(pt.rate), int(pt in vertices)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-K", "--users", type=int, required=True, help="number of users (= caches)")
    common.add_argument("-N", "--files", type=int, default=None, help="number of files (default: K)")
    common.add_argument("-k", "--cache-subfiles", type=int, default=None,
                        help="sub-files per cache; gamma = k/K")
    common.add_argument("-z", "--access", type=int, default=None, help="caches reachable by each user")
    common.add_argument("--demands", help="comma-separated file index per user")
    common.add_argument("--worst", action="store_true", help="random distinct demands (seeded)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "csv", "json"), default="text")
    common.add_argument("--out", help=f"output path (relative paths resolve under ${OUTPUT_DIR_ENV} if set)")
    common.add_argument("--trials", type=int, default=0)
    common.add_argument("--scale", type=int, default=1, help="file size multiplier")

    parser = argparse.ArgumentParser(prog="maccache", description="Multi-access coded caching toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rates", parents=[common], help="closed-form rates at one point").set_defaults(func=cmd_rates)
    sub.add_parser("sweep", parents=[common], help="CSV of rates over (k, z)").set_defaults(func=cmd_sweep)
    sp = sub.add_parser("schedule", parents=[common], help="dump the transmission schedule")
    sp.add_argument("--placement", action="store_true", help="prefix the dump with cache contents")
    sp.set_defaults(func=cmd_schedule)
    sub.add_parser("verify", parents=[common], help="end-to-end decode check").set_defaults(func=cmd_verify)
    sub.add_parser("envelope", parents=[common], help="rate points and hull vertices").set_defaults(
        func=cmd_envelope)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("rates", "schedule", "verify"):
        if args.cache_subfiles is None:
            args.cache_subfiles = 1
        if args.access is None:
            parser.error("--access is required")
    try:
        return args.func(args)
    except (InvalidParams, InvalidDemands, analysis.DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
