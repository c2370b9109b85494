"""Compiled vs pure-Python DTW kernel timings.

    python benchmarks/bench_kernels.py [--sizes 50,100,200] [--m 3] [--reps 5]
"""
import argparse

from zkseries import kernels
from zkseries.evaluation import loglog_slope, run_benchmarks


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="50,100,150,200,250,300")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args()
    if not kernels.has_compiled():
        raise SystemExit("compiled kernels are not built (or ZKSERIES_PURE=1 is set)")
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = run_benchmarks(sizes, args.m, reps=args.reps, pure=True, sharp=False)
    print(f"{'T':>5} {'compiled_s':>12} {'python_s':>12} {'speedup':>8}")
    for r in rows:
        print(f"{r['T']:>5} {r['dtw_s']:>12.6f} {r['dtw_pure_s']:>12.6f} {r['dtw_pure_s'] / r['dtw_s']:>8.1f}")
    if len(sizes) > 1:
        print(f"slope compiled={loglog_slope(sizes, [r['dtw_s'] for r in rows]):.2f} "
              f"python={loglog_slope(sizes, [r['dtw_pure_s'] for r in rows]):.2f}")


if __name__ == "__main__":
    main()
