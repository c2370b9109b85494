"""Prime-order group arithmetic, Pedersen commitments and the Fiat-Shamir transcript.

The group is the prime-order subgroup of edwards25519 (order ``L`` just
above 2**252), driven through libsodium's point and scalar primitives.
Points are handled in their canonical 32-byte compressed encoding.

Commitments are ``C(x, r) = x*g + r*h`` where ``g`` is the standard base
point and ``h`` is hashed to the group from ``g``, the seed and a label,
so nobody knows ``log_g(h)``.
"""
from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass, field

import nacl.bindings as sodium
from nacl.exceptions import CryptoError

L = 2**252 + 27742317777372353535851937790883648493
SCALAR_BYTES = 32
IDENTITY = bytes([1]) + bytes(31)
BASEPOINT = sodium.crypto_scalarmult_ed25519_base_noclamp((1).to_bytes(32, "little"))
DEFAULT_SEED = b"zkseries/params/v1"


class GroupError(ValueError):
    """Malformed point or scalar encoding."""


# anything a verifier may hit on hostile input; verifiers turn these into False
MALFORMED = (GroupError, CryptoError, ValueError, TypeError, AttributeError, KeyError, IndexError)


# ---------------------------------------------------------------- scalars / points

def scalar_bytes(x: int) -> bytes:
    return (x % L).to_bytes(SCALAR_BYTES, "little")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise GroupError("scalar must be 32 bytes")
    x = int.from_bytes(data, "little")
    if x >= L:
        raise GroupError("non-canonical scalar")
    return x


def random_scalar() -> int:
    return secrets.randbelow(L)


def decode_point(data: bytes) -> bytes:
    if len(data) != 32:
        raise GroupError("point must be 32 bytes")
    if data != IDENTITY and not sodium.crypto_core_ed25519_is_valid_point(data):
        raise GroupError("not a canonical prime-order point")
    return bytes(data)


def point_add(p: bytes, q: bytes) -> bytes:
    if p == IDENTITY:
        return q
    if q == IDENTITY:
        return p
    return sodium.crypto_core_ed25519_add(p, q)


def point_sub(p: bytes, q: bytes) -> bytes:
    if q == IDENTITY:
        return p
    return sodium.crypto_core_ed25519_sub(p, q)


def point_neg(p: bytes) -> bytes:
    return point_sub(IDENTITY, p)


def point_mul(k: int, p: bytes) -> bytes:
    k %= L
    if k == 0 or p == IDENTITY:
        return IDENTITY
    if p == BASEPOINT:
        return sodium.crypto_scalarmult_ed25519_base_noclamp(scalar_bytes(k))
    return sodium.crypto_scalarmult_ed25519_noclamp(scalar_bytes(k), p)


def multi_mul(scalars, points) -> bytes:
    acc = IDENTITY
    for k, p in zip(scalars, points):
        acc = point_add(acc, point_mul(k, p))
    return acc


def hash_to_group(*parts: bytes) -> bytes:
    h = hashlib.sha512()
    for part in parts:
        h.update(struct.pack("<I", len(part)))
        h.update(part)
    point = sodium.crypto_core_ed25519_from_uniform(h.digest()[:32])
    if point == IDENTITY:  # pragma: no cover - probability ~2**-252
        raise GroupError("hash-to-group produced the identity")
    return point


# ---------------------------------------------------------------- parameters

@dataclass(eq=False)
class CommitParams:
    """Public commitment parameters shared by every installation."""

    seed: bytes
    g: bytes
    h: bytes
    label: bytes = b"zkseries"
    _vectors: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other):
        return (isinstance(other, CommitParams) and self.seed == other.seed
                and self.g == other.g and self.h == other.h and self.label == other.label)

    def __hash__(self):
        return hash((self.seed, self.g, self.h))

    def generators(self, tag: str, n: int) -> list[bytes]:
        """First ``n`` independent generators of the family ``tag`` (cached)."""
        gens = self._vectors.setdefault(tag, [])
        while len(gens) < n:
            gens.append(hash_to_group(self.label, self.seed, tag.encode(),
                                      struct.pack("<Q", len(gens))))
        return gens[:n]


def setup_params(seed: bytes = DEFAULT_SEED, label: bytes = b"zkseries") -> CommitParams:
    g = BASEPOINT
    h = hash_to_group(label, b"pedersen-h", g, seed)
    return CommitParams(seed=seed, g=g, h=h, label=label)


# ---------------------------------------------------------------- commitments

@dataclass(frozen=True)
class Commitment:
    point: bytes

    def __add__(self, other: "Commitment") -> "Commitment":
        return Commitment(point_add(self.point, other.point))

    def __sub__(self, other: "Commitment") -> "Commitment":
        return Commitment(point_sub(self.point, other.point))

    def __neg__(self) -> "Commitment":
        return Commitment(point_neg(self.point))

    def __mul__(self, k: int) -> "Commitment":
        return Commitment(point_mul(k, self.point))

    __rmul__ = __mul__

    def hex(self) -> str:
        return self.point.hex()

    @classmethod
    def from_hex(cls, s: str) -> "Commitment":
        try:
            raw = bytes.fromhex(s)
        except (TypeError, ValueError) as exc:
            raise GroupError("bad hex") from exc
        return cls(decode_point(raw))

    @classmethod
    def identity(cls) -> "Commitment":
        return cls(IDENTITY)


def commit(params: CommitParams, x: int, r: int) -> Commitment:
    return Commitment(point_add(point_mul(x, params.g), point_mul(r, params.h)))


def commit_public(params: CommitParams, x: int) -> Commitment:
    """Commitment to a public scalar with zero blinding."""
    return Commitment(point_mul(x, params.g))


def combine(c1: Commitment, c2: Commitment) -> Commitment:
    return c1 + c2


def scale(c: Commitment, k: int) -> Commitment:
    return c * k


def verify_opening(params: CommitParams, c: Commitment, x: int, r: int) -> bool:
    return commit(params, x, r) == c


# ---------------------------------------------------------------- transcript

class Transcript:
    """Running SHA-512 state with length-prefixed, labelled appends.

    Each challenge is folded back into the state, so later challenges depend
    on every earlier one.
    """

    def __init__(self, domain: bytes = b"zkseries"):
        self._h = hashlib.sha512()
        self.append(b"domain", domain)

    def append(self, label: bytes | str, data: bytes):
        if isinstance(label, str):
            label = label.encode()
        self._h.update(struct.pack("<I", len(label)) + label)
        self._h.update(struct.pack("<Q", len(data)) + data)

    def append_scalar(self, label, x: int):
        self.append(label, scalar_bytes(x))

    def append_int(self, label, x: int):
        # nonnegative integers of any size, length-prefixed little-endian
        self.append(label, x.to_bytes(max(1, (x.bit_length() + 7) // 8), "little"))

    def append_point(self, label, p: bytes | Commitment):
        self.append(label, p.point if isinstance(p, Commitment) else p)

    def _squeeze(self, label) -> bytes:
        if isinstance(label, str):
            label = label.encode()
        fork = self._h.copy()
        fork.update(b"challenge" + struct.pack("<I", len(label)) + label)
        out = fork.digest()
        self.append(b"challenge-out", out)
        return out

    def challenge(self, label) -> int:
        return int.from_bytes(self._squeeze(label), "little") % L

    def challenge_bits(self, label, bits: int) -> int:
        """Uniform integer in ``[0, 2**bits)`` for ``bits <= 512``."""
        return int.from_bytes(self._squeeze(label), "little") >> (512 - bits)

    def copy(self) -> "Transcript":
        t = Transcript.__new__(Transcript)
        t._h = self._h.copy()
        return t

    def adopt(self, other: "Transcript"):
        """Continue from ``other``'s state (used after proving on a fork)."""
        self._h = other._h.copy()

    def state(self) -> bytes:
        return self._h.copy().digest()


__all__ = [
    "L", "MALFORMED", "CommitParams", "Commitment", "GroupError", "Transcript", "combine", "commit",
    "commit_public", "decode_point", "decode_scalar", "hash_to_group", "multi_mul",
    "random_scalar", "scale", "scalar_bytes", "setup_params", "verify_opening",
]
