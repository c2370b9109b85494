"""Threshold calibration, accuracy metrics, synthetic data and timing benchmarks."""
from __future__ import annotations

import csv
import json
import math
import statistics
import timeit
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from zkseries.circuit import AUTH_MODES, auth_distance
from zkseries.group import Transcript, commit, random_scalar, setup_params
from zkseries.series import (
    DEFAULT_K,
    DistanceConfig,
    TimeSeries,
    diagonal_sum_distance,
    dtw_distance,
    series_distance,
)
from zkseries.sharp import DEFAULT_R, RangeClaim, get_prime_cache, sharp_prove_batch, sharp_verify_batch

BENCH_COLUMNS = ["T", "m", "claims", "sum_s", "dtw_s", "dtw_pure_s", "sharp_gen_s", "sharp_ver_s"]


def _effective_k(auth: str, k: int) -> int:
    if auth not in AUTH_MODES:
        raise ValueError(f"unknown authentication mode {auth!r}")
    return 1 if auth == "nearest" else k


def _auth_value(dists: list[int], auth: str, k: int) -> int:
    return auth_distance(sorted(dists)[:k], auth)


def distance_matrix(a: list[TimeSeries], b: list[TimeSeries], cfg: DistanceConfig) -> np.ndarray:
    """``out[i, j] = series distance from base a[i] to reading b[j]``."""
    out = np.zeros((len(a), len(b)), dtype=object)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i, j] = series_distance(x, y, cfg, witness=False)[0]
    return out


def leave_one_out_distances(readings: list[TimeSeries], cfg: DistanceConfig, auth: str, k: int,
                            matrix=None) -> list[int]:
    n = len(readings)
    if n < 2:
        raise ValueError("calibration needs at least two readings")
    k = _effective_k(auth, k)
    if k > n - 1:
        raise ValueError(f"k={k} exceeds the n-1={n - 1} other readings")
    if matrix is None:
        matrix = distance_matrix(readings, readings, cfg)
    return [_auth_value([matrix[j, i] for j in range(n) if j != i], auth, k) for i in range(n)]


def threshold_from_distances(dists, q: int) -> int:
    if not 1 <= q <= len(dists):
        raise ValueError(f"q must be in [1, {len(dists)}]")
    return int(sorted(dists)[q - 1]) + 1


def calibrate_threshold(user_readings: list[TimeSeries], cfg: DistanceConfig, auth: str, k: int,
                        q: int) -> int:
    """One past the q-th smallest leave-one-out authentication distance."""
    return threshold_from_distances(leave_one_out_distances(user_readings, cfg, auth, k), q)


@dataclass
class EvalReport:
    config: dict
    auth: str
    k: int
    q: int
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0
    thresholds: dict = field(default_factory=dict)

    @property
    def genuine(self) -> int:
        return self.tp + self.fn

    @property
    def impostor(self) -> int:
        return self.fp + self.tn

    @property
    def accuracy(self) -> float:
        total = self.genuine + self.impostor
        return (self.tp + self.tn) / total if total else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / self.impostor if self.impostor else 0.0

    @property
    def precision(self) -> float:
        # no positive decisions at all: report 0 rather than undefined
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.genuine if self.genuine else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metrics"] = {"accuracy": self.accuracy, "fpr": self.fpr,
                        "precision": self.precision, "recall": self.recall}
        d["counts"] = {"genuine": self.genuine, "impostor": self.impostor}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def evaluate_metrics(dataset: dict, cfg: DistanceConfig, auth: str, k: int, q: int) -> EvalReport:
    """Genuine attempts: each user's own readings, leave-one-out.  Impostors: everyone else's."""
    if len(dataset) < 2:
        raise ValueError("evaluation needs at least two users")
    k = _effective_k(auth, k)
    users = sorted(dataset)
    report = EvalReport(cfg.to_dict(), auth, k, q)
    for u in users:
        own = dataset[u]
        loo = leave_one_out_distances(own, cfg, auth, k)
        theta = threshold_from_distances(loo, q)
        report.thresholds[u] = theta
        for d in loo:
            if d < theta:
                report.tp += 1
            else:
                report.fn += 1
        for v in users:
            if v == u:
                continue
            others = dataset[v]
            mat = distance_matrix(own, others, cfg)
            for j in range(len(others)):
                if _auth_value(list(mat[:, j]), auth, min(k, len(own))) < theta:
                    report.fp += 1
                else:
                    report.tn += 1
    return report


def generate_synthetic_dataset(users: int, n: int, T: int, m: int, intra_noise: int,
                               inter_spread: int, seed: int, K: int = DEFAULT_K) -> dict:
    """Per user a random template; readings are template plus bounded integer noise in ``[0, K]``."""
    if min(users, n, T, m) < 1 or intra_noise < 0 or inter_spread < 0:
        raise ValueError("sizes must be positive and noise levels nonnegative")
    rng = np.random.default_rng(seed)
    shape = rng.integers(K // 4, 3 * K // 4 + 1, size=(T, m))
    out = {}
    for u in range(users):
        template = shape + rng.integers(-inter_spread, inter_spread + 1, size=(T, m))
        readings = []
        for _ in range(n):
            noise = rng.integers(-intra_noise, intra_noise + 1, size=(T, m))
            readings.append(TimeSeries(np.clip(template + noise, 0, K)))
        out[f"user{u:03d}"] = readings
    return out


def save_dataset(dataset: dict, directory):
    """One subdirectory per user, one CSV per reading."""
    root = Path(directory)
    for user, readings in dataset.items():
        d = root / user
        d.mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(readings):
            with open(d / f"reading_{i:03d}.csv", "w", newline="") as fh:
                csv.writer(fh).writerows(r.points)


def load_dataset(directory, K: int = DEFAULT_K) -> dict:
    """Inverse of :func:`save_dataset`; raw float readings are scaled per user."""
    from zkseries.protocol import load_readings_dir

    root = Path(directory)
    users = sorted(p for p in root.iterdir() if p.is_dir())
    if not users:
        raise ValueError(f"{directory}: no user directories")
    return {p.name: load_readings_dir(p, K)[0] for p in users}


# ---------------------------------------------------------------- benchmarks

def _median_time(fn, reps: int, min_batch: float = 0.02) -> float:
    """Median per-call seconds over ``reps`` batches; fast calls are looped to ``min_batch``."""
    timer = timeit.Timer(fn)
    once = timer.timeit(1)
    number = max(1, math.ceil(min_batch / max(once, 1e-9))) if once < min_batch else 1
    return statistics.median(timer.repeat(repeat=reps, number=number)) / number


def time_sharp(n_claims: int, bound: int, R: int = DEFAULT_R, reps: int = 5, seed: int = 0,
               params=None, cache=None) -> tuple[float, float]:
    """Median generation and verification time of one batch of ``n_claims`` claims."""
    params = params or setup_params()
    cache = cache or get_prime_cache()
    rng = np.random.default_rng(seed)
    claims = []
    for v in rng.integers(0, bound + 1, size=n_claims).tolist():
        r = random_scalar()
        claims.append(RangeClaim(commit(params, v, r), bound, v, r))
    publics = [c.public() for c in claims]
    proof = sharp_prove_batch(params, Transcript(b"bench"), claims, R, cache)
    gen = _median_time(lambda: sharp_prove_batch(params, Transcript(b"bench"), claims, R, cache), reps)
    ver = _median_time(lambda: sharp_verify_batch(params, Transcript(b"bench"), publics, proof), reps)
    return gen, ver


def run_benchmarks(sizes, m: int = 3, cfg: DistanceConfig | None = None, R: int = DEFAULT_R,
                   reps: int = 5, seed: int = 0, pure: bool = True, sharp: bool = True) -> list[dict]:
    """Per T: diagonal sum and DTW time (compiled and pure kernels) and the batched
    range proof over ``T*m`` coordinate claims; medians over ``reps`` runs."""
    cfg = cfg or DistanceConfig("manhattan", "dtw")
    rng = np.random.default_rng(seed)
    params = setup_params()
    cache = get_prime_cache() if sharp else None
    rows = []
    for T in sizes:
        x = TimeSeries(rng.integers(0, cfg.K + 1, size=(T, m)))
        y = TimeSeries(rng.integers(0, cfg.K + 1, size=(T, m)))
        row = {"T": T, "m": m, "claims": T * m}
        row["sum_s"] = _median_time(lambda: diagonal_sum_distance(x, y, cfg), reps)
        row["dtw_s"] = _median_time(lambda: dtw_distance(x, y, cfg, witness=False), reps)
        row["dtw_pure_s"] = (_median_time(lambda: dtw_distance(x, y, cfg, "python", witness=False), reps)
                             if pure else float("nan"))
        if sharp:
            row["sharp_gen_s"], row["sharp_ver_s"] = time_sharp(T * m, cfg.K, R, reps, seed, params, cache)
        else:
            row["sharp_gen_s"] = row["sharp_ver_s"] = float("nan")
        rows.append(row)
    return rows


def write_bench_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.6f}" if isinstance(r[k], float) else r[k]) for k in BENCH_COLUMNS})


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])
