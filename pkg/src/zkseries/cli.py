"""Command-line entry point.

Exit codes: 0 success/accept, 1 reject or authentication failure,
2 usage, configuration or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from zkseries.circuit import AuthenticationFailed
from zkseries.evaluation import (
    evaluate_metrics,
    generate_synthetic_dataset,
    load_dataset,
    run_benchmarks,
    save_dataset,
    write_bench_csv,
)
from zkseries.protocol import (
    BoardConflictError,
    ProtocolConfig,
    ProtocolError,
    load_config,
    load_readings_dir,
    load_record,
    prove_authentication,
    register,
    save_record,
    verify_authentication,
)
from zkseries.series import SeriesError

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


def _config(path) -> ProtocolConfig:
    return load_config(path) if path else ProtocolConfig()


def cmd_register(args) -> int:
    cfg = _config(args.config)
    readings, mm = load_readings_dir(args.readings, cfg.distance.K)
    record, entry = register(args.user, readings, cfg.params(), args.board, mm)
    save_record(record, args.out)
    print(f"registered {args.user}: {len(entry.commitments)} commitments in board entry {entry.seq}")
    return EXIT_OK


def cmd_prove(args) -> int:
    cfg = _config(args.config)
    record = load_record(args.record)
    try:
        prove_authentication(record, args.fresh, cfg, args.theta, args.k, args.out)
    except AuthenticationFailed:
        print("authentication failed", file=sys.stderr)
        return EXIT_REJECT
    print(f"bundle written to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args.config)
    ok, reason = verify_authentication(args.board, args.bundle, args.fresh, cfg, args.theta, args.k)
    print("accept" if ok else f"reject: {reason}")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_eval(args) -> int:
    cfg = _config(args.config)
    if args.synthetic:
        users, n, T, m, noise, spread, seed = (int(v) for v in args.synthetic.split(","))
        save_dataset(generate_synthetic_dataset(users, n, T, m, noise, spread, seed, cfg.distance.K),
                     args.data)
    dataset = load_dataset(args.data, cfg.distance.K)
    report = evaluate_metrics(dataset, cfg.distance, args.auth or cfg.auth, args.k or cfg.k, args.q)
    Path(args.out).write_text(report.to_json())
    m = report.to_dict()["metrics"]
    print(" ".join(f"{k}={v:.4f}" for k, v in m.items()))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args.config)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = run_benchmarks(sizes, args.m, cfg.distance, args.R or cfg.R, args.reps,
                          pure=not args.no_pure, sharp=not args.no_sharp)
    write_bench_csv(rows, args.out)
    for r in rows:
        cells = [f"T={r['T']:>4}"] + [f"{k[:-2]}={r[k]:.6f}s" for k in
                                      ("sum_s", "dtw_s", "dtw_pure_s", "sharp_gen_s", "sharp_ver_s")
                                      if r[k] == r[k]]  # skips nan columns
        print(" ".join(cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zkseries", description="Zero-knowledge time-series authentication")
    p.add_argument("-v", "--verbose", action="store_true", help="log verification diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("register", help="commit base readings to the bulletin board")
    r.add_argument("--user", required=True)
    r.add_argument("--readings", required=True, help="directory of CSV/JSON readings")
    r.add_argument("--board", required=True)
    r.add_argument("--out", required=True, help="registration record to write")
    r.add_argument("--config")
    r.set_defaults(func=cmd_register)

    pr = sub.add_parser("prove", help="build an authentication proof bundle")
    pr.add_argument("--record", required=True)
    pr.add_argument("--fresh", required=True)
    pr.add_argument("--config")
    pr.add_argument("--theta", type=int, required=True)
    pr.add_argument("--k", type=int)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_prove)

    v = sub.add_parser("verify", help="check a bundle against the board and the fresh reading")
    v.add_argument("--board", required=True)
    v.add_argument("--bundle", required=True)
    v.add_argument("--fresh", required=True)
    v.add_argument("--config")
    v.add_argument("--theta", type=int, required=True)
    v.add_argument("--k", type=int)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="calibrate thresholds and report accuracy metrics")
    e.add_argument("--data", required=True, help="one subdirectory of readings per user")
    e.add_argument("--config")
    e.add_argument("--q", type=int, required=True)
    e.add_argument("--k", type=int)
    e.add_argument("--auth", choices=["nearest", "knn_sum", "knn_max"])
    e.add_argument("--out", required=True)
    e.add_argument("--synthetic", metavar="USERS,N,T,M,NOISE,SPREAD,SEED",
                   help="first write a synthetic dataset into --data")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="time distances and batched range proofs")
    b.add_argument("--sizes", default="50,100,150,200,250,300")
    b.add_argument("--m", type=int, default=3)
    b.add_argument("--config")
    b.add_argument("--R", type=int)
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--no-pure", action="store_true", help="skip the pure-Python DTW column")
    b.add_argument("--no-sharp", action="store_true", help="skip the range-proof columns")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, ProtocolError, SeriesError, BoardConflictError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
