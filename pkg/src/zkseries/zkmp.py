"""Zero-knowledge multiplication proofs.

Shows that commitments ``c_x, c_y, c_xy`` hide ``x``, ``y`` and ``x*y``.
The product relation is rewritten as ``c_xy = x*c_y + (r_xy - x*r_y)*h``,
so one sigma protocol proves knowledge of both openings and of ``x`` as the
discrete log of ``c_xy`` relative to ``c_y`` (up to ``h``).

Proof layout: three announcements, five responses, one challenge.
"""
from __future__ import annotations

from dataclasses import dataclass

from zkseries.group import (
    L,
    CommitParams,
    Commitment,
    MALFORMED,
    GroupError,
    Transcript,
    commit,
    decode_point,
    decode_scalar,
    point_add,
    point_mul,
    random_scalar,
    scalar_bytes,
)


class ZkmpError(ValueError):
    """The witness does not satisfy the statement."""


@dataclass(frozen=True)
class ZkmpProof:
    announcements: tuple[bytes, bytes, bytes]
    responses: tuple[int, int, int, int, int]
    challenge: int

    def to_dict(self) -> dict:
        return {
            "A": [a.hex() for a in self.announcements],
            "z": [scalar_bytes(z).hex() for z in self.responses],
            "e": scalar_bytes(self.challenge).hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ZkmpProof":
        try:
            ann = tuple(decode_point(bytes.fromhex(a)) for a in d["A"])
            resp = tuple(decode_scalar(bytes.fromhex(z)) for z in d["z"])
            e = decode_scalar(bytes.fromhex(d["e"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GroupError("malformed multiplication proof") from exc
        if len(ann) != 3 or len(resp) != 5:
            raise GroupError("malformed multiplication proof")
        return cls(ann, resp, e)


def _bind(transcript: Transcript, label: bytes, stmt, announcements) -> int:
    transcript.append(b"zkmp", label)
    for c in stmt:
        transcript.append_point(b"stmt", c)
    for a in announcements:
        transcript.append_point(b"ann", a)
    return transcript.challenge(b"zkmp-e")


def zkmp_prove(params: CommitParams, transcript: Transcript, stmt, wit, label: bytes = b"") -> ZkmpProof:
    """Prove ``stmt = (c_x, c_y, c_xy)`` with witness ``(x, y, r_x, r_y, r_xy)``."""
    c_x, c_y, c_xy = stmt
    x, y, r_x, r_y, r_xy = (v % L for v in wit)
    if (commit(params, x, r_x) != c_x or commit(params, y, r_y) != c_y
            or commit(params, x * y, r_xy) != c_xy):
        raise ZkmpError("witness does not open the statement")

    a, b_x, a_y, b_y, b_z = (random_scalar() for _ in range(5))
    ann = (
        point_add(point_mul(a, params.g), point_mul(b_x, params.h)),
        point_add(point_mul(a_y, params.g), point_mul(b_y, params.h)),
        point_add(point_mul(a, c_y.point), point_mul(b_z, params.h)),
    )
    e = _bind(transcript, label, stmt, ann)
    resp = (
        (a + e * x) % L,
        (b_x + e * r_x) % L,
        (a_y + e * y) % L,
        (b_y + e * r_y) % L,
        (b_z + e * (r_xy - x * r_y)) % L,
    )
    return ZkmpProof(ann, resp, e)


def zkmp_verify(params: CommitParams, transcript: Transcript, stmt, proof: ZkmpProof,
                label: bytes = b"") -> bool:
    """Check the three verification equations; never raises on bad input."""
    try:
        c_x, c_y, c_xy = stmt
        e = _bind(transcript, label, stmt, proof.announcements)
        if e != proof.challenge:
            return False
        z1, z2, z3, z4, z5 = proof.responses
        A1, A2, A3 = proof.announcements
        lhs1 = point_add(point_mul(z1, params.g), point_mul(z2, params.h))
        if lhs1 != point_add(A1, point_mul(e, c_x.point)):
            return False
        lhs2 = point_add(point_mul(z3, params.g), point_mul(z4, params.h))
        if lhs2 != point_add(A2, point_mul(e, c_y.point)):
            return False
        lhs3 = point_add(point_mul(z1, c_y.point), point_mul(z5, params.h))
        return lhs3 == point_add(A3, point_mul(e, c_xy.point))
    except MALFORMED:
        return False
