"""Integer time-series mathematics.

Normalization and smoothing of raw readings, local distances between
points, and series distances that also return the coupling realizing
them.  Everything is exact integer arithmetic; the heavy dynamic programs
live in :mod:`zkseries.kernels`.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from zkseries import kernels

LOCAL_KINDS = ("manhattan", "squared_euclidean", "chebyshev")
SERIES_KINDS = ("diagonal_sum", "dtw", "frechet", "twed")
DEFAULT_K = 1_000_000
DEFAULT_LAMBDA = 1_000_000

_LOCAL_CODE = {name: i for i, name in enumerate(LOCAL_KINDS)}
_SERIES_CODE = {"dtw": kernels._pykernels.DTW, "frechet": kernels._pykernels.FRECHET,
                "twed": kernels._pykernels.TWED}


class SeriesError(ValueError):
    """Invalid series, configuration or coupling."""


class TimeSeries:
    """Immutable sequence of ``T`` points, each a vector of ``m`` nonnegative ints."""

    __slots__ = ("_data",)

    def __init__(self, points):
        arr = np.array(points, dtype=object)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SeriesError("a time series needs T >= 1 points of equal dimension m >= 1")
        rows = []
        for row in arr:
            out = []
            for v in row:
                if isinstance(v, (bool, np.bool_)) or int(v) != v:
                    raise SeriesError(f"non-integer coordinate {v!r}")
                if v < 0:
                    raise SeriesError(f"negative coordinate {v!r}")
                out.append(int(v))
            rows.append(out)
        data = np.array(rows, dtype=np.int64)
        data.setflags(write=False)
        self._data = data

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def T(self) -> int:
        return self._data.shape[0]

    @property
    def m(self) -> int:
        return self._data.shape[1]

    @property
    def points(self) -> list[tuple[int, ...]]:
        return [tuple(row) for row in self._data.tolist()]

    def __len__(self):
        return self.T

    def __getitem__(self, t):
        return tuple(self._data[t].tolist())

    def __eq__(self, other):
        return isinstance(other, TimeSeries) and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self):
        return f"TimeSeries(T={self.T}, m={self.m})"

    def max_value(self) -> int:
        return int(self._data.max())


@dataclass(frozen=True)
class CouplingWitness:
    """Index pairs (1-based) of a coupling plus the cost attached to each pair."""

    pairs: tuple[tuple[int, int], ...]
    edge_values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))
        object.__setattr__(self, "edge_values", tuple(int(v) for v in self.edge_values))


@dataclass(frozen=True)
class DistanceConfig:
    local: str = "manhattan"
    series: str = "dtw"
    lam: int = DEFAULT_LAMBDA
    band: int | None = None
    K: int = DEFAULT_K

    def __post_init__(self):
        if self.local not in LOCAL_KINDS:
            raise SeriesError(f"unknown local distance {self.local!r}")
        if self.series not in SERIES_KINDS:
            raise SeriesError(f"unknown series distance {self.series!r}")
        if self.lam < 0:
            raise SeriesError("lambda must be nonnegative")
        if self.band is not None and self.band < 0:
            raise SeriesError("band must be nonnegative")
        if self.K < 1:
            raise SeriesError("K must be positive")

    @property
    def local_code(self) -> int:
        return _LOCAL_CODE[self.local]

    def to_dict(self) -> dict:
        return {"local": self.local, "series": self.series, "lam": self.lam,
                "band": self.band, "K": self.K}

    @classmethod
    def from_dict(cls, d: dict) -> "DistanceConfig":
        return cls(local=d.get("local", "manhattan"), series=d.get("series", "dtw"),
                   lam=int(d.get("lam", DEFAULT_LAMBDA)),
                   band=None if d.get("band") is None else int(d["band"]),
                   K=int(d.get("K", DEFAULT_K)))

    def local_bound(self, m: int) -> int:
        """Largest possible local distance between points with coordinates in [0, K]."""
        if self.local == "manhattan":
            return self.K * m
        if self.local == "squared_euclidean":
            return self.K * self.K * m
        return self.K


# ---------------------------------------------------------------- preprocessing

def _round_half_up(q: Fraction) -> int:
    return (q.numerator * 2 + q.denominator) // (2 * q.denominator)


def _exact(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def normalize_series(raw: Sequence[Sequence[float]], per_signal_min_max: Sequence[tuple[float, float]],
                     K: int = DEFAULT_K) -> TimeSeries:
    """Scale each signal to ``round(K * (x - min) / (max - min))``.

    Values outside the registration min/max are clamped to ``[0, K]``.
    """
    if K < 1:
        raise SeriesError("K must be positive")
    bounds = [(_exact(lo), _exact(hi)) for lo, hi in per_signal_min_max]
    for j, (lo, hi) in enumerate(bounds):
        if hi <= lo:
            raise SeriesError(f"degenerate signal {j}: max must exceed min")
    rows = []
    for row in raw:
        if len(row) != len(bounds):
            raise SeriesError(f"expected {len(bounds)} signals per row, got {len(row)}")
        out = []
        for v, (lo, hi) in zip(row, bounds):
            scaled = _round_half_up(K * (_exact(v) - lo) / (hi - lo))
            out.append(min(max(scaled, 0), K))
        rows.append(out)
    return TimeSeries(rows)


def compute_min_max(corpus: Iterable[Sequence[Sequence[float]]]) -> list[tuple[float, float]]:
    lo = hi = None
    for raw in corpus:
        for row in raw:
            if lo is None:
                lo, hi = list(row), list(row)
                continue
            for j, v in enumerate(row):
                lo[j] = min(lo[j], v)
                hi[j] = max(hi[j], v)
    if lo is None:
        raise SeriesError("empty corpus")
    return list(zip(lo, hi))


def smooth_moving_average(x: TimeSeries, k: int, w: int) -> TimeSeries:
    """Windowed mean with step ``k`` and width ``w``; output length ``ceil(T/k)``."""
    if k < 1 or w < 1:
        raise SeriesError("step and window must be >= 1")
    data = x.array.tolist()
    T = len(data)
    out = []
    for start in range(0, T, k):
        window = data[start:min(start + w, T)]
        n = len(window)
        out.append([(2 * sum(col) + n) // (2 * n) for col in zip(*window)])
    return TimeSeries(out)


# ---------------------------------------------------------------- distances

def _kind(cfg_or_kind) -> str:
    return cfg_or_kind.local if isinstance(cfg_or_kind, DistanceConfig) else cfg_or_kind


def local_distance(a: Sequence[int], b: Sequence[int], cfg) -> int:
    """Manhattan, squared Euclidean or Chebyshev distance of two points."""
    if len(a) != len(b):
        raise SeriesError(f"dimension mismatch: {len(a)} vs {len(b)}")
    kind = _kind(cfg)
    diffs = [abs(int(p) - int(q)) for p, q in zip(a, b)]
    if kind == "manhattan":
        return sum(diffs)
    if kind == "squared_euclidean":
        return sum(d * d for d in diffs)
    if kind == "chebyshev":
        return max(diffs)
    raise SeriesError(f"unknown local distance {kind!r}")


def _check_pair(x: TimeSeries, y: TimeSeries):
    if x.m != y.m:
        raise SeriesError(f"dimension mismatch: {x.m} vs {y.m}")


def edge_costs(x: TimeSeries, y: TimeSeries, pairs, cfg: DistanceConfig) -> list[int]:
    """Per-pair cost of a coupling under ``cfg.series``.

    For TWED the cost of a pair depends on the step that reached it.
    """
    xs, ys = x.points, y.points
    out = []
    prev = None
    for i, j in pairs:
        if cfg.series != "twed" or prev is None:
            out.append(local_distance(xs[i - 1], ys[j - 1], cfg))
        else:
            di, dj = i - prev[0], j - prev[1]
            if di and dj:
                out.append(local_distance(xs[i - 1], ys[j - 1], cfg)
                           + local_distance(xs[i - 2], ys[j - 2], cfg))
            elif di:
                out.append(cfg.lam + local_distance(xs[i - 1], xs[i - 2], cfg))
            else:
                out.append(cfg.lam + local_distance(ys[j - 1], ys[j - 2], cfg))
        prev = (i, j)
    return out


def combine_edges(values: Sequence[int], series: str) -> int:
    if series == "frechet":
        return max(values)
    return sum(values)


def diagonal_sum_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig):
    """Sum of local distances over the common prefix of the two series."""
    _check_pair(x, y)
    T = min(x.T, y.T)
    pairs = tuple((t, t) for t in range(1, T + 1))
    values = edge_costs(x, y, pairs, DistanceConfig(cfg.local, "diagonal_sum", K=cfg.K))
    return sum(values), CouplingWitness(pairs, values)


def _warped(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig, series: str, backend=None,
            witness=True):
    _check_pair(x, y)
    band = -1
    if series == "dtw" and cfg.band is not None:
        if abs(x.T - y.T) > cfg.band:
            raise SeriesError("band too narrow to connect the endpoints")
        band = cfg.band
    lam = cfg.lam if series == "twed" else 0
    dist, ii, jj = kernels.warp(x.array, y.array, cfg.local_code, _SERIES_CODE[series],
                                lam, band, backend=backend)
    if not witness:
        return dist, None
    pairs = tuple((i + 1, j + 1) for i, j in zip(ii, jj))
    values = edge_costs(x, y, pairs, cfg)
    return dist, CouplingWitness(pairs, values)


# witness=False skips building the per-pair costs (distance only)

def dtw_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig, backend=None, witness=True):
    return _warped(x, y, cfg, "dtw", backend, witness)


def frechet_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig, backend=None, witness=True):
    return _warped(x, y, cfg, "frechet", backend, witness)


def twed_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig, backend=None, witness=True):
    return _warped(x, y, cfg, "twed", backend, witness)


def series_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig, backend=None, witness=True):
    """Dispatch on ``cfg.series``; returns ``(distance, witness or None)``."""
    if cfg.series == "diagonal_sum":
        return diagonal_sum_distance(x, y, cfg)
    return _warped(x, y, cfg, cfg.series, backend, witness)


def validate_coupling(w: CouplingWitness, Tx: int, Ty: int, series_kind: str,
                      band: int | None = None) -> bool:
    pairs = w.pairs
    if not pairs or len(w.edge_values) != len(pairs):
        return False
    if series_kind == "diagonal_sum":
        T = min(Tx, Ty)
        return pairs == tuple((t, t) for t in range(1, T + 1))
    if pairs[0] != (1, 1) or pairs[-1] != (Tx, Ty):
        return False
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
            return False
    if band is not None and series_kind == "dtw":
        if any(abs(i - j) > band for i, j in pairs):
            return False
    return True


def iter_couplings(Tx: int, Ty: int):
    """Every monotone path from (1,1) to (Tx,Ty) with unit steps."""
    def rec(path):
        i, j = path[-1]
        if (i, j) == (Tx, Ty):
            yield tuple(path)
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            if i + di <= Tx and j + dj <= Ty:
                path.append((i + di, j + dj))
                yield from rec(path)
                path.pop()
    yield from rec([(1, 1)])


def brute_force_series_distance(x: TimeSeries, y: TimeSeries, cfg: DistanceConfig) -> int:
    """Exact minimum over all valid couplings by exhaustive enumeration."""
    _check_pair(x, y)
    if x.T * y.T > 64:
        raise SeriesError("instance too large for exhaustive enumeration")
    if cfg.series == "diagonal_sum":
        T = min(x.T, y.T)
        return sum(local_distance(x[t], y[t], cfg) for t in range(T))
    best = None
    for pairs in iter_couplings(x.T, y.T):
        if cfg.series == "dtw" and cfg.band is not None and any(abs(i - j) > cfg.band for i, j in pairs):
            continue
        value = combine_edges(edge_costs(x, y, pairs, cfg), cfg.series)
        if best is None or value < best:
            best = value
    if best is None:
        raise SeriesError("band too narrow to connect the endpoints")
    return best


# ---------------------------------------------------------------- file formats

def read_reading(path) -> list[list[float]]:
    """Load a raw reading: CSV (one row per step) or JSON (array of arrays).

    A CSV header row is skipped when its first cell is not numeric.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        return [[v for v in (row if isinstance(row, list) else [row])] for row in data]
    rows = []
    with path.open(newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([_parse_number(c) for c in row])
            except ValueError:
                if k == 0:
                    continue
                raise SeriesError(f"{path}: unparsable row {k + 1}") from None
    return rows


def _parse_number(cell: str):
    cell = cell.strip()
    try:
        return int(cell)
    except ValueError:
        return float(cell)


def load_min_max(path) -> list[tuple[float, float]]:
    data = json.loads(Path(path).read_text())
    return [(lo, hi) for lo, hi in zip(data["min"], data["max"])]


def save_min_max(path, bounds: Sequence[tuple[float, float]]):
    Path(path).write_text(json.dumps({"min": [lo for lo, _ in bounds],
                                      "max": [hi for _, hi in bounds]}))


def load_series(path, min_max=None, K: int = DEFAULT_K) -> TimeSeries:
    """Read a reading file; normalize when ``min_max`` is given, else expect integers."""
    raw = read_reading(path)
    if min_max is not None:
        return normalize_series(raw, min_max, K)
    return TimeSeries(raw)
