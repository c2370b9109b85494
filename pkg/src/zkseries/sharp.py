"""Batched range proofs by three-square decomposition.

A committed ``v`` lies in ``[0, B]`` iff ``4v(B - v) + 1`` is a sum of three
squares (it is ``1 mod 4``, so never of the form ``4^a (8b + 7)``, and it is
negative outside the interval).  The prover commits to square roots
``y_1, y_2, y_3`` and shows the quadratic relation for every claim at once:

* ``Cx`` commits to all values over per-claim generators and is linked to the
  claim commitments through transcript-derived weights ``rho_i``;
* each claim gets its own commitment ``Cy_i`` to its roots;
* masked responses ``z = mask + gamma * secret`` are short integers, checked
  against an explicit window; rejection sampling keeps them independent of
  the secrets;
* the relation polynomial ``4 z_x (gamma B - z_x) + gamma^2 - sum z_y^2``
  has no ``gamma^2`` term for honest witnesses, so two commitments to the
  weighted linear and constant coefficients close the argument.

``gamma`` has ``R`` bits, giving soundness error ``2^-R``.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import secrets
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt
from pathlib import Path

import gmpy2
import numpy as np

from zkseries import kernels
from zkseries.group import (
    L,
    MALFORMED,
    CommitParams,
    Commitment,
    GroupError,
    Transcript,
    commit,
    decode_point,
    multi_mul,
    point_add,
    point_mul,
    random_scalar,
)

log = logging.getLogger(__name__)

DEFAULT_R = 40
DEFAULT_CACHE_LIMIT = 1_000_000
MASK_SLACK = 16
MAX_ATTEMPTS = 64


class RangeViolation(ValueError):
    """A prover-side value is outside its declared interval."""


class DecompositionError(ValueError):
    pass


# ---------------------------------------------------------------- prime cache

def two_squares_prime(p: int) -> tuple[int, int]:
    """``(a, b)`` with ``a <= b`` and ``a*a + b*b == p`` for ``p = 2`` or ``p = 1 mod 4``."""
    if p == 2:
        return 1, 1
    if p % 4 != 1:
        raise DecompositionError(f"{p} is not 1 mod 4")
    c = 2
    while pow(c, (p - 1) // 2, p) != p - 1:
        c += 1
    t = pow(c, (p - 1) // 4, p)
    a, b = p, t
    while b * b > p:
        a, b = b, a % b
    x = b
    y = isqrt(p - x * x)
    if x * x + y * y != p:
        raise DecompositionError(f"{p} is not prime")
    return min(x, y), max(x, y)


@dataclass
class PrimeCache:
    limit: int
    primes: np.ndarray
    a: np.ndarray
    b: np.ndarray
    table: np.ndarray = field(repr=False)
    _table_list: list | None = field(default=None, repr=False)

    @classmethod
    def from_rows(cls, limit, primes, a, b) -> "PrimeCache":
        primes = np.asarray(primes, dtype=np.int64)
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        table = np.full(limit + 1, -1, dtype=np.int32)
        table[primes] = a
        return cls(limit, primes, a, b, kernels.as_table(table))

    @property
    def table_list(self) -> list:
        if self._table_list is None:
            self._table_list = self.table.tolist()
        return self._table_list

    def __len__(self):
        return len(self.primes)

    def __contains__(self, p: int) -> bool:
        return 0 <= p <= self.limit and self.table[p] >= 0

    def lookup(self, p: int) -> tuple[int, int]:
        a = int(self.table[p])
        return a, isqrt(p - a * a)

    def validate(self) -> bool:
        ok = np.all(self.primes == self.a * self.a + self.b * self.b)
        return bool(ok and np.all(np.diff(self.primes) > 0) and self.primes[-1] <= self.limit)


def sieve(limit: int) -> np.ndarray:
    mark = np.ones(limit + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if mark[p]:
            mark[p * p::p] = False
    return np.flatnonzero(mark)


def build_prime_cache(limit: int = DEFAULT_CACHE_LIMIT) -> PrimeCache:
    if limit < 5:
        raise ValueError("cache limit must be at least 5")
    primes = [2] + [int(p) for p in sieve(limit) if p % 4 == 1]
    pairs = [two_squares_prime(p) for p in primes]
    return PrimeCache.from_rows(limit, primes, [x for x, _ in pairs], [y for _, y in pairs])


def save_prime_cache(cache: PrimeCache, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# L={cache.limit}\n")
        w = csv.writer(fh)
        w.writerow(["p", "a", "b"])
        w.writerows(zip(cache.primes.tolist(), cache.a.tolist(), cache.b.tolist()))


def load_prime_cache(path) -> PrimeCache:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# L="):
            raise ValueError(f"{path}: missing limit header")
        limit = int(first[4:])
        rows = list(csv.reader(fh))
    if rows[0] != ["p", "a", "b"]:
        raise ValueError(f"{path}: expected columns p,a,b")
    data = np.array(rows[1:], dtype=np.int64).reshape(-1, 3)
    cache = PrimeCache.from_rows(limit, data[:, 0], data[:, 1], data[:, 2])
    if not cache.validate():
        raise ValueError(f"{path}: corrupt prime cache")
    return cache


@lru_cache(maxsize=4)
def _cached(limit: int, path: str | None) -> PrimeCache:
    if path and Path(path).exists():
        return load_prime_cache(path)
    cache = build_prime_cache(limit)
    if path:
        save_prime_cache(cache, path)
    return cache


def get_prime_cache(path=None, limit: int = DEFAULT_CACHE_LIMIT) -> PrimeCache:
    """Shared cache; loaded from ``path`` when present, else built (and saved there)."""
    return _cached(limit, str(path) if path else None)


# ---------------------------------------------------------------- decomposition

def decompose_three_squares(n: int, cache: PrimeCache | None = None) -> tuple[int, int, int]:
    """Deterministic ``(y1, y2, y3)`` with ``y1^2 + y2^2 + y3^2 == n``."""
    if n < 1 or n % 4 != 1:
        raise DecompositionError(f"{n} is not a positive integer 1 mod 4")
    cache = cache or get_prime_cache()
    s, a, b = kernels.sweep_three_squares(n, cache.table, cache.table_list)
    if s >= 0:
        return s, a, b
    if a < 0:
        raise DecompositionError(f"no decomposition found for {n}")
    # the remainder outgrew the table: probabilistic primality from here on
    for s in range(a, -1, -1):
        r = n - s * s
        t = isqrt(r)
        if t * t == r:
            return s, t, 0
        if r <= cache.limit:
            if r in cache:
                x, y = cache.lookup(r)
                return s, x, y
        elif r % 4 == 1 and gmpy2.is_prime(r):
            x, y = two_squares_prime(r)
            return s, x, y
    raise DecompositionError(f"no decomposition found for {n}")  # pragma: no cover


def relation_value(v: int, bound: int) -> int:
    return 4 * v * (bound - v) + 1


# ---------------------------------------------------------------- claims / proof

@dataclass(frozen=True)
class RangeClaim:
    commitment: Commitment
    bound: int
    value: int | None = None
    randomness: int | None = None

    def public(self) -> tuple[Commitment, int]:
        return self.commitment, self.bound


@dataclass(frozen=True)
class SharpBatchProof:
    R: int
    y_commitments: tuple[bytes, ...]
    cx: bytes
    dx: bytes
    dy: bytes
    dlink: bytes
    ca1: bytes
    ca0: bytes
    challenge: int
    zx: tuple[int, ...]
    zy: tuple[tuple[int, int, int], ...]
    tx: int
    ty: int
    u: int
    ta: int

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "Cy": [p.hex() for p in self.y_commitments],
            "Cx": self.cx.hex(), "Dx": self.dx.hex(), "Dy": self.dy.hex(),
            "Dlink": self.dlink.hex(), "CA1": self.ca1.hex(), "CA0": self.ca0.hex(),
            "gamma": format(self.challenge, "x"),
            "zx": [format(z, "x") for z in self.zx],
            "zy": [[format(z, "x") for z in t] for t in self.zy],
            "t": [format(v, "x") for v in (self.tx, self.ty, self.u, self.ta)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SharpBatchProof":
        try:
            pt = lambda s: decode_point(bytes.fromhex(s))  # noqa: E731
            num = lambda s: int(s, 16)  # noqa: E731
            t = [num(v) for v in d["t"]]
            if len(t) != 4:
                raise ValueError("bad scalar list")
            zy = tuple(tuple(num(z) for z in row) for row in d["zy"])
            if any(len(row) != 3 for row in zy):
                raise ValueError("bad root response")
            return cls(
                R=int(d["R"]),
                y_commitments=tuple(pt(s) for s in d["Cy"]),
                cx=pt(d["Cx"]), dx=pt(d["Dx"]), dy=pt(d["Dy"]),
                dlink=pt(d["Dlink"]), ca1=pt(d["CA1"]), ca0=pt(d["CA0"]),
                challenge=num(d["gamma"]),
                zx=tuple(num(z) for z in d["zx"]),
                zy=zy,
                tx=t[0], ty=t[1], u=t[2], ta=t[3],
            )
        except MALFORMED as exc:
            raise GroupError("malformed range proof") from exc


def _width(bound: int) -> int:
    return (bound + 1).bit_length()


def _header(transcript: Transcript, publics, R: int):
    transcript.append(b"sharp", struct.pack("<IQ", R, len(publics)))
    for c, bound in publics:
        transcript.append_int(b"B", bound)
        transcript.append_point(b"c", c)


def _weights(transcript: Transcript, n: int) -> list[int]:
    seed = transcript.challenge(b"sharp-rho").to_bytes(32, "little")
    return [int.from_bytes(hashlib.sha512(seed + struct.pack("<Q", i)).digest(), "little") % L
            for i in range(n)]


def _gens(params: CommitParams, n: int):
    return params.generators("sharp-x", n), params.generators("sharp-y", 3 * n)


def sharp_prove_batch(params: CommitParams, transcript: Transcript, claims, R: int = DEFAULT_R,
                      cache: PrimeCache | None = None) -> SharpBatchProof:
    if R < 1:
        raise ValueError("R must be positive")
    if not claims:
        raise ValueError("empty batch")
    n = len(claims)
    vs, rs, bounds = [], [], []
    for i, cl in enumerate(claims):
        if cl.value is None or cl.randomness is None:
            raise ValueError(f"claim {i} lacks its opening")
        if cl.bound < 0:
            raise ValueError(f"claim {i}: bound must be nonnegative")
        v = cl.value
        if not 0 <= v <= cl.bound:
            raise RangeViolation("range claim violated")
        if commit(params, v, cl.randomness) != cl.commitment:
            raise ValueError(f"claim {i}: commitment does not open")
        vs.append(v)
        rs.append(cl.randomness)
        bounds.append(cl.bound)
    ys = [decompose_three_squares(relation_value(v, b), cache) for v, b in zip(vs, bounds)]

    gx, gy = _gens(params, n)
    r_x = random_scalar()
    cx = point_add(multi_mul(vs, gx), point_mul(r_x, params.h))
    sy = [random_scalar() for _ in range(n)]
    cys = [point_add(multi_mul(ys[i], gy[3 * i:3 * i + 3]), point_mul(sy[i], params.h))
           for i in range(n)]

    _header(transcript, [cl.public() for cl in claims], R)
    transcript.append_point(b"Cx", cx)
    for p in cys:
        transcript.append_point(b"Cy", p)
    rho = _weights(transcript, n)
    rho_r = sum(w * r for w, r in zip(rho, rs)) % L
    sy_total = sum(sy) % L

    widths = [_width(b) for b in bounds]
    for _ in range(MAX_ATTEMPTS):
        xm = [secrets.randbelow(1 << (w + R + MASK_SLACK)) for w in widths]
        ym = [[secrets.randbelow(1 << (w + R + MASK_SLACK)) for _ in range(3)] for w in widths]
        rx_m, ry_m, s_m, t1, t0 = (random_scalar() for _ in range(5))
        dx = point_add(multi_mul(xm, gx), point_mul(rx_m, params.h))
        dy = point_add(multi_mul([m for row in ym for m in row], gy), point_mul(ry_m, params.h))
        dlink = point_add(point_mul(sum(w * m for w, m in zip(rho, xm)), params.g),
                          point_mul(s_m, params.h))
        a1 = a0 = 0
        for i in range(n):
            yi, mi = ys[i], ym[i]
            c1 = 4 * bounds[i] * xm[i] - 8 * vs[i] * xm[i] - 2 * sum(y * m for y, m in zip(yi, mi))
            c0 = -(4 * xm[i] * xm[i] + sum(m * m for m in mi))
            a1 += rho[i] * c1
            a0 += rho[i] * c0
        ca1 = commit(params, a1, t1).point
        ca0 = commit(params, a0, t0).point

        fork = transcript.copy()
        for p in (dx, dy, dlink, ca1, ca0):
            fork.append_point(b"sharp-ann", p)
        gamma = fork.challenge_bits(b"sharp-gamma", R)

        zx = [m + gamma * v for m, v in zip(xm, vs)]
        zy = [tuple(m + gamma * y for m, y in zip(mi, yi)) for mi, yi in zip(ym, ys)]
        if all(_short(z, w, R) for z, w in zip(zx, widths)) and \
                all(_short(z, w, R) for row, w in zip(zy, widths) for z in row):
            transcript.adopt(fork)
            return SharpBatchProof(
                R=R, y_commitments=tuple(cys), cx=cx, dx=dx, dy=dy, dlink=dlink,
                ca1=ca1, ca0=ca0, challenge=gamma, zx=tuple(zx), zy=tuple(zy),
                tx=(rx_m + gamma * r_x) % L, ty=(ry_m + gamma * sy_total) % L,
                u=(s_m + gamma * rho_r) % L, ta=(t0 + gamma * t1) % L,
            )
    raise RuntimeError("rejection sampling did not converge")  # pragma: no cover


def _short(z: int, width: int, R: int) -> bool:
    return (1 << (width + R)) <= z < (1 << (width + R + MASK_SLACK))


def sharp_verify_batch(params: CommitParams, transcript: Transcript, claims_public,
                       proof: SharpBatchProof, R: int | None = None) -> bool:
    """``claims_public`` is a list of ``(commitment, bound)`` pairs."""
    try:
        return _verify(params, transcript, list(claims_public), proof, R)
    except MALFORMED as exc:
        log.debug("range proof malformed: %s", exc)
        return False


def _verify(params, transcript, publics, proof, R) -> bool:
    n = len(publics)
    if n == 0 or not isinstance(proof, SharpBatchProof):
        return False
    if R is not None and proof.R != R:
        return False
    if proof.R < 1 or len(proof.y_commitments) != n or len(proof.zx) != n or len(proof.zy) != n:
        return False
    bounds = [int(b) for _, b in publics]
    if any(b < 0 for b in bounds):
        return False
    widths = [_width(b) for b in bounds]
    if not all(_short(z, w, proof.R) for z, w in zip(proof.zx, widths)):
        return False
    if not all(len(row) == 3 and all(_short(z, w, proof.R) for z in row)
               for row, w in zip(proof.zy, widths)):
        return False
    for s in (proof.tx, proof.ty, proof.u, proof.ta):
        if not 0 <= s < L:
            return False

    _header(transcript, publics, proof.R)
    transcript.append_point(b"Cx", proof.cx)
    for p in proof.y_commitments:
        transcript.append_point(b"Cy", p)
    rho = _weights(transcript, n)
    for p in (proof.dx, proof.dy, proof.dlink, proof.ca1, proof.ca0):
        transcript.append_point(b"sharp-ann", p)
    gamma = transcript.challenge_bits(b"sharp-gamma", proof.R)
    if gamma != proof.challenge:
        return False

    gx, gy = _gens(params, n)
    h = params.h
    lhs = point_add(multi_mul(proof.zx, gx), point_mul(proof.tx, h))
    if lhs != point_add(proof.dx, point_mul(gamma, proof.cx)):
        return False
    cy_sum = Commitment.identity().point
    for p in proof.y_commitments:
        cy_sum = point_add(cy_sum, p)
    lhs = point_add(multi_mul([z for row in proof.zy for z in row], gy), point_mul(proof.ty, h))
    if lhs != point_add(proof.dy, point_mul(gamma, cy_sum)):
        return False
    c_rho = multi_mul(rho, [c.point for c, _ in publics])
    lhs = point_add(point_mul(sum(w * z for w, z in zip(rho, proof.zx)), params.g), point_mul(proof.u, h))
    if lhs != point_add(proof.dlink, point_mul(gamma, c_rho)):
        return False
    f = 0
    for w, b, zx, zy in zip(rho, bounds, proof.zx, proof.zy):
        f += w * (4 * zx * (gamma * b - zx) + gamma * gamma - sum(z * z for z in zy))
    lhs = commit(params, f, proof.ta).point
    return lhs == point_add(point_mul(gamma, proof.ca1), proof.ca0)
