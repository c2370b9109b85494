import random

import pytest

from zkseries.group import L, Transcript, commit, random_scalar, setup_params
from zkseries.zkmp import ZkmpError, ZkmpProof, zkmp_prove, zkmp_verify

P = setup_params()


def instance(x, y, rng=None):
    rx, ry, rz = (random_scalar() for _ in range(3))
    stmt = (commit(P, x, rx), commit(P, y, ry), commit(P, x * y, rz))
    return stmt, (x, y, rx, ry, rz)


def prove(stmt, wit, label=b""):
    return zkmp_prove(P, Transcript(b"t"), stmt, wit, label)


def verify(stmt, proof, label=b""):
    return zkmp_verify(P, Transcript(b"t"), stmt, proof, label)


def test_three_times_four():
    stmt, wit = instance(3, 4)
    assert verify(stmt, prove(stmt, wit))


def test_zero_annihilator():
    stmt, wit = instance(0, 987654321)
    assert verify(stmt, prove(stmt, wit))


def test_prover_refuses_wrong_product():
    rx, ry, rz = 1, 2, 3
    stmt = (commit(P, 3, rx), commit(P, 4, ry), commit(P, 13, rz))
    with pytest.raises(ZkmpError):
        prove(stmt, (3, 4, rx, ry, rz))


def test_completeness_1000():
    rng = random.Random(3)
    for _ in range(1000):
        x = rng.choice([rng.randrange(2**40), rng.randrange(L)])
        y = rng.randrange(2**40)
        stmt, wit = instance(x, y)
        assert verify(stmt, prove(stmt, wit))


def test_response_perturbation_rejected():
    stmt, wit = instance(3, 4)
    proof = prove(stmt, wit)
    for i in range(5):
        z = list(proof.responses)
        z[i] = (z[i] + 1) % L
        assert not verify(stmt, ZkmpProof(proof.announcements, tuple(z), proof.challenge))


def test_statement_binding():
    stmt, wit = instance(3, 4)
    proof = prove(stmt, wit)
    other, _ = instance(3, 4)
    assert not verify(other, proof)
    assert not verify((stmt[1], stmt[0], stmt[2]), proof)
    assert not verify(stmt, proof, label=b"elsewhere")


def test_mutation_fuzz_1000():
    rng = random.Random(11)
    stmt, wit = instance(6, 7)
    proof = prove(stmt, wit)
    accepted = 0
    for _ in range(1000):
        field = rng.randrange(4)
        s, ann, z, e = list(stmt), list(proof.announcements), list(proof.responses), proof.challenge
        if field == 0:
            i = rng.randrange(3)
            s[i] = s[i] + commit(P, rng.randrange(1, 1000), 0)
        elif field == 1:
            i = rng.randrange(3)
            ann[i] = commit(P, rng.randrange(1, L), 0).point
        elif field == 2:
            i = rng.randrange(5)
            z[i] = (z[i] + rng.randrange(1, L)) % L
        else:
            e = (e + rng.randrange(1, L)) % L
        accepted += verify(tuple(s), ZkmpProof(tuple(ann), tuple(z), e))
    assert accepted == 0


def test_fresh_randomness_changes_every_announcement():
    stmt, wit = instance(5, 8)
    p1, p2 = prove(stmt, wit), prove(stmt, wit)
    assert all(a != b for a, b in zip(p1.announcements, p2.announcements))


def test_serialization_round_trip_and_malformed():
    stmt, wit = instance(2, 9)
    proof = prove(stmt, wit)
    back = ZkmpProof.from_dict(proof.to_dict())
    assert back == proof and verify(stmt, back)
    assert not verify(stmt, "garbage")
    assert not verify((stmt[0],), proof)
