"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines
interleaved with pytest's own output (they are printed either way).
"""
import itertools
import json
import logging
import random
import time

import numpy as np
import pytest

from helpers import PARAMS, mutate_bundle_dict, random_series_points
from zkseries.cli import main
from zkseries.evaluation import evaluate_metrics, generate_synthetic_dataset, loglog_slope, run_benchmarks, time_sharp
from zkseries.group import commit
from zkseries.protocol import BoardEntry, ProtocolConfig, prove_authentication, register, verify_authentication
from zkseries.series import (
    DistanceConfig,
    TimeSeries,
    brute_force_series_distance,
    diagonal_sum_distance,
    dtw_distance,
    frechet_distance,
    local_distance,
    twed_distance,
)
from zkseries.sharp import decompose_three_squares, get_prime_cache, relation_value

LOCALS = ["manhattan", "squared_euclidean", "chebyshev"]
SERIES = ["diagonal_sum", "dtw", "frechet", "twed"]
AUTHS = ["nearest", "knn_sum", "knn_max"]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def write_reading(path, points):
    path.write_text("\n".join(",".join(str(v) for v in row) for row in points) + "\n")


def test_c01_oracle_equivalence(report):
    rng = random.Random(101)
    funcs = {"dtw": dtw_distance, "frechet": frechet_distance, "twed": twed_distance}
    mismatches = 0
    start = time.perf_counter()
    for name, fn in funcs.items():
        for _ in range(1000):
            m = rng.randint(1, 2)
            x = TimeSeries(random_series_points(rng, rng.randint(1, 6), m, 20))
            y = TimeSeries(random_series_points(rng, rng.randint(1, 6), m, 20))
            cfg = DistanceConfig(rng.choice(LOCALS), name, lam=rng.randint(0, 5), K=20)
            if fn(x, y, cfg)[0] != brute_force_series_distance(x, y, cfg):
                mismatches += 1
    elapsed = time.perf_counter() - start
    ok = report(1, mismatches == 0 and elapsed < 10,
                f"3x1000 instances, {mismatches} mismatches, {elapsed:.2f}s (limit 10s)")
    assert ok


def test_c02_dtw_below_diagonal_sum(report):
    cfg = DistanceConfig("manhattan", "dtw", K=10)
    x, y = TimeSeries([1, 5, 1, 1, 2]), TimeSeries([1, 1, 5, 0, 1])
    fig = (diagonal_sum_distance(x, y, cfg)[0], dtw_distance(x, y, cfg)[0])
    rng = random.Random(102)
    violations = 0
    for _ in range(1000):
        T, m = rng.randint(1, 12), rng.randint(1, 3)
        cfg = DistanceConfig(rng.choice(LOCALS), "dtw", K=50)
        a = TimeSeries(random_series_points(rng, T, m, 50))
        b = TimeSeries(random_series_points(rng, T, m, 50))
        if dtw_distance(a, b, cfg)[0] > diagonal_sum_distance(a, b, cfg)[0]:
            violations += 1
    ok = report(2, violations == 0 and fig[1] < fig[0],
                f"constructed pair diagonal={fig[0]} dtw={fig[1]}; {violations}/1000 violations")
    assert fig == (10, 2)
    assert ok


def _is_three_square_brute(n):
    if n < 0:
        return False
    r = int(n ** 0.5) + 1
    squares = {a * a for a in range(r + 1)}
    return any(n - a * a - b * b in squares
               for a in range(r + 1) if a * a <= n
               for b in range(a, r + 1) if a * a + b * b <= n)


def test_c03_three_square_relation(report):
    start = time.perf_counter()
    violations = 0
    checked = 0
    for B in range(0, 51):
        for x in range(-2 * B, 2 * B + 1):
            n = relation_value(x, B)
            assert n == 4 * x * (B - x) + 1
            checked += 1
            if _is_three_square_brute(n) != (0 <= x <= B):
                violations += 1
    elapsed = time.perf_counter() - start
    ok = report(3, violations == 0 and elapsed < 30,
                f"{checked} (B, x) pairs, {violations} violations, {elapsed:.2f}s (limit 30s)")
    assert ok


def test_c04_decomposition_validity(report):
    cache = get_prime_cache()
    start = time.perf_counter()
    failures = 0
    for n in range(1, 10**6 + 1, 4):
        y = decompose_three_squares(n, cache)
        if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] != n:
            failures += 1
    elapsed = time.perf_counter() - start
    ok = report(4, failures == 0 and elapsed < 60,
                f"250000 values, {failures} failures, {elapsed:.2f}s (limit 60s)")
    assert ok


def _plain_auth(base, fresh, cfg, auth, k):
    from zkseries.series import series_distance
    d = sorted(series_distance(b, fresh, cfg, witness=False)[0] for b in base)[:k]
    return max(d) if auth == "knn_max" else sum(d)


def _session_inputs(rng, tmp, idx, loc, ser, auth):
    m = rng.randint(1, 2)
    T = rng.randint(2, 4)
    n_base = rng.randint(2, 4)
    base = [TimeSeries(random_series_points(rng, T if ser == "diagonal_sum" else rng.randint(2, 4), m, 100))
            for _ in range(n_base)]
    fresh_pts = random_series_points(rng, T, m, 100)
    k = 1 if auth == "nearest" else rng.randint(1, n_base)
    cfg = ProtocolConfig(DistanceConfig(loc, ser, lam=rng.randint(0, 50), K=100), auth=auth, k=k)
    board = tmp / f"board{idx}.json"
    fresh = tmp / f"fresh{idx}.csv"
    write_reading(fresh, fresh_pts)
    theta = _plain_auth(base, TimeSeries(fresh_pts), cfg.distance, auth, k) + 1
    return base, cfg, board, fresh, theta


def test_c05_completeness(report, tmp_path):
    rng = random.Random(105)
    combos = list(itertools.product(LOCALS, SERIES, AUTHS))
    start = time.perf_counter()
    accepted = 0
    seen = set()
    for s in range(100):
        loc, ser, auth = combos[s % len(combos)]
        seen.add((loc, ser, auth))
        base, cfg, board, fresh, theta = _session_inputs(rng, tmp_path, s, loc, ser, auth)
        record, _ = register(f"user{s}", base, PARAMS, board)
        bundle = tmp_path / f"bundle{s}.json"
        prove_authentication(record, fresh, cfg, theta, out_path=bundle)
        ok, _ = verify_authentication(board, bundle, fresh, cfg, theta)
        accepted += ok
    elapsed = time.perf_counter() - start
    ok = report(5, accepted == 100 and len(seen) == 36 and elapsed < 600,
                f"{accepted}/100 accepted over {len(seen)} combinations, {elapsed:.1f}s (limit 600s)")
    assert ok


def test_c06_soundness_fuzzing(report, tmp_path):
    rng = random.Random(106)
    honest = []
    for s, (loc, ser, auth) in enumerate([("manhattan", "dtw", "knn_sum"), ("chebyshev", "frechet", "knn_max"),
                                          ("squared_euclidean", "twed", "nearest"),
                                          ("manhattan", "diagonal_sum", "knn_max")]):
        base, cfg, board, fresh, theta = _session_inputs(rng, tmp_path, s, loc, ser, auth)
        record, _ = register(f"user{s}", base, PARAMS, board)
        path = tmp_path / f"honest{s}.json"
        prove_authentication(record, fresh, cfg, theta, out_path=path)
        assert verify_authentication(board, path, fresh, cfg, theta)[0]
        honest.append((cfg, board, fresh, theta, json.loads(path.read_text()), base))

    accepted = 0
    attempts = 0
    target = tmp_path / "mutant.json"
    for i in range(1000):
        cfg, board, fresh, theta, d, _ = honest[i % len(honest)]
        mutant, _ = mutate_bundle_dict(d, rng)
        target.write_text(json.dumps(mutant))
        accepted += verify_authentication(board, target, fresh, cfg, theta)[0]
        attempts += 1

    for s, (cfg, board, fresh, theta, d, base) in enumerate(honest):
        bundle = tmp_path / f"honest{s}.json"
        # fresh-reading substitution
        raw = [[int(v) for v in line.split(",")] for line in fresh.read_text().split()]
        raw[0][0] = (raw[0][0] + 37) % 101
        other = tmp_path / f"other{s}.csv"
        write_reading(other, raw)
        accepted += verify_authentication(board, bundle, other, cfg, theta)[0]
        attempts += 1
        # board tampering: edited fields (with and without resealing) and chain surgery
        original = board.read_text()
        doc = json.loads(original)
        entry = doc["entries"][1]
        swapped = list(reversed(entry["commitments"]))
        fresh_comm = commit(PARAMS, 5, 7).hex()
        edits = [("commitments", swapped), ("commitments", [fresh_comm] + entry["commitments"][1:]),
                 ("user", "mallory"), ("meta", {**entry["meta"], "min_max": [[0, 1]] * base[0].m}),
                 ("hash", "00" * 32)]
        tamperings = []
        for field, value in edits:
            for reseal in (False, True):
                e = BoardEntry.from_dict({**entry, field: value})
                if reseal and field != "hash":
                    e = e.sealed()
                tamperings.append({**doc, "entries": [doc["entries"][0], e.to_dict()]})
        tamperings.append({**doc, "entries": doc["entries"][1:]})
        tamperings.append({**doc, "entries": [doc["entries"][0]]})
        # a different user's honest registration standing in for the entry
        alt_board = tmp_path / f"alt{s}.json"
        register(entry["user"], [TimeSeries(random_series_points(rng, b.T, b.m, 100)) for b in base],
                 PARAMS, alt_board)
        tamperings.append(json.loads(alt_board.read_text()))
        for t in tamperings:
            board.write_text(json.dumps(t))
            accepted += verify_authentication(board, bundle, fresh, cfg, theta)[0]
            attempts += 1
        board.write_text(original)
        assert verify_authentication(board, bundle, fresh, cfg, theta)[0]
    ok = report(6, accepted == 0, f"{attempts} forged attempts (1000 bundle mutations), {accepted} accepted")
    assert ok


def test_c07_batching_performance(report):
    gen150, _ = time_sharp(150, 100, reps=3, seed=7)
    gen900, _ = time_sharp(900, 100, reps=3, seed=7)
    ratio = gen900 / gen150
    ok = report(7, ratio < 2, f"gen(150)={gen150:.3f}s gen(900)={gen900:.3f}s ratio={ratio:.2f} (limit 2.0)")
    assert ok


def test_c08_dtw_scaling(report):
    sizes = [50, 100, 150, 200, 250, 300]
    rows = run_benchmarks(sizes, m=3, reps=5, pure=False, sharp=False)
    slope = loglog_slope(sizes, [r["dtw_s"] for r in rows])
    ok = report(8, 1.6 <= slope <= 2.4, f"log-log slope {slope:.3f} (range [1.6, 2.4])")
    assert ok


def test_c09_calibration_property(report):
    n = 10
    results = []
    for auth, k, seed in (("nearest", 1, 1), ("knn_sum", 3, 2), ("knn_max", 3, 3)):
        ds = generate_synthetic_dataset(6, n, 20, 2, intra_noise=10, inter_spread=200, seed=seed, K=10_000)
        r = evaluate_metrics(ds, DistanceConfig("manhattan", "dtw", K=10_000), auth, k, n - 1)
        results.append((auth, r.recall, r.fpr))
    ok = all(rec >= (n - 1) / n and fpr <= 0.01 for _, rec, fpr in results)
    detail = "; ".join(f"{a}: recall={rec:.3f} fpr={fpr:.4f}" for a, rec, fpr in results)
    report(9, ok, detail)
    assert ok


def test_c10_no_oracle_contract(report, tmp_path, capsys, caplog):
    rng = random.Random(110)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"local": "manhattan", "series": "dtw", "K": 100, "auth": "knn_sum", "k": 2}))
    base = [TimeSeries(random_series_points(rng, 4, 2, 100)) for _ in range(3)]
    record_path = tmp_path / "rec.json"
    from zkseries.protocol import save_record
    record, _ = register("alice", base, PARAMS, tmp_path / "board.json")
    save_record(record, record_path)
    caplog.set_level(logging.DEBUG)
    outputs = set()
    leaked = 0
    for s in range(100):
        fresh = tmp_path / f"probe{s}.csv"
        pts = random_series_points(rng, rng.randint(2, 5), 2, 100)
        write_reading(fresh, pts)
        true = _plain_auth(base, TimeSeries(pts), DistanceConfig("manhattan", "dtw", K=100), "knn_sum", 2)
        theta = rng.randint(0, true)  # every probe is below the real distance: a bisection attempt
        out = tmp_path / f"bundle{s}.json"
        caplog.clear()
        args = ["prove", "--record", record_path, "--fresh", fresh, "--config", cfg_path,
                "--theta", theta, "--out", out]
        code = main([str(a) for a in (["-v"] if s % 2 else []) + args])
        captured = capsys.readouterr()
        outputs.add((code, captured.out, captured.err))
        if caplog.records or out.exists():
            leaked += 1
    ok = report(10, outputs == {(1, "", "authentication failed\n")} and leaked == 0,
                f"100 failing sessions, {len(outputs)} distinct output(s), {leaked} with logs or files")
    assert ok
