"""Authentication proofs: local distance -> series distance -> authentication distance.

The prover and the verifier walk the same circuit layout.  The layout is a
pure function of the configuration, the revealed base indices and the
revealed coupling pairs, so both sides produce sub-proofs, transcript labels
and range claims in one canonical order:

    selected base index ascending, then coupling order, then coordinate order.

Gadgets
  square      new commitment to x^2 plus a multiplication proof
  abs         commitment s with s in [0, K] and s^2 == diff^2 (two squares
              and a zero opening of their difference)
  max         branch bit plus the claim winner - loser in [0, bound]

Local distances are built from the coordinate differences of two committed
points: squared euclidean sums squares, manhattan sums abs gadgets and
chebyshev folds them with max.  Sums are homomorphic and cost nothing.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

from zkseries.group import (
    L,
    MALFORMED,
    CommitParams,
    Commitment,
    Transcript,
    commit,
    commit_public,
    decode_scalar,
    random_scalar,
    scalar_bytes,
)
from zkseries.series import (
    CouplingWitness,
    DistanceConfig,
    SeriesError,
    TimeSeries,
    local_distance,
    series_distance,
    validate_coupling,
)
from zkseries.sharp import (
    DEFAULT_R,
    PrimeCache,
    RangeClaim,
    SharpBatchProof,
    sharp_prove_batch,
    sharp_verify_batch,
)
from zkseries.zkmp import ZkmpProof, zkmp_prove, zkmp_verify

log = logging.getLogger(__name__)

AUTH_MODES = ("nearest", "knn_sum", "knn_max")
BUNDLE_VERSION = 1
DOMAIN = b"zkseries/auth/v1"


class AuthenticationFailed(Exception):
    """Plaintext authentication distance is not below the threshold."""

    def __init__(self):
        super().__init__("authentication failed")


class Reject(Exception):
    """Internal: a verification check failed."""


# ---------------------------------------------------------------- nodes

@dataclass(frozen=True)
class Node:
    """A committed circuit value; the opening is known on the prover side only."""

    c: Commitment
    value: int | None = None
    rand: int | None = None

    def __add__(self, other: "Node") -> "Node":
        if self.value is None or other.value is None:
            return Node(self.c + other.c)
        return Node(self.c + other.c, self.value + other.value, (self.rand + other.rand) % L)

    def __sub__(self, other: "Node") -> "Node":
        if self.value is None or other.value is None:
            return Node(self.c - other.c)
        return Node(self.c - other.c, self.value - other.value, (self.rand - other.rand) % L)


def public_node(params: CommitParams, v: int, prover: bool) -> Node:
    c = commit_public(params, v)
    return Node(c, v, 0) if prover else Node(c)


def node_sum(params, nodes, prover):
    acc = public_node(params, 0, prover)
    for nd in nodes:
        acc = acc + nd
    return acc


# ---------------------------------------------------------------- committed readings

@dataclass
class CommittedSeries:
    """A base reading with its per-coordinate blinding and commitments."""

    series: TimeSeries
    randomness: list[list[int]]
    commitments: list[list[Commitment]]

    def nodes(self) -> list[list[Node]]:
        pts = self.series.points
        return [[Node(c, v, r) for c, v, r in zip(crow, prow, rrow)]
                for crow, prow, rrow in zip(self.commitments, pts, self.randomness)]


def commit_series(params: CommitParams, series: TimeSeries, randomness=None) -> CommittedSeries:
    if randomness is None:
        randomness = [[random_scalar() for _ in range(series.m)] for _ in range(series.T)]
    comms = [[commit(params, v, r) for v, r in zip(p, rr)] for p, rr in zip(series.points, randomness)]
    return CommittedSeries(series, randomness, comms)


# ---------------------------------------------------------------- layout walker

@dataclass(frozen=True)
class AuthSettings:
    cfg: DistanceConfig
    auth: str
    k: int
    theta: int
    m: int
    R: int = DEFAULT_R

    def __post_init__(self):
        if self.auth not in AUTH_MODES:
            raise ValueError(f"unknown authentication mode {self.auth!r}")
        if self.k < 1 or (self.auth == "nearest" and self.k != 1):
            raise ValueError("nearest requires k = 1 and every mode k >= 1")
        if self.theta < 1:
            raise ValueError("theta must be at least 1")

    def bounds(self) -> dict:
        return {"coord": self.cfg.K, "local": self.cfg.local_bound(self.m), "threshold": self.theta - 1}

    def fingerprint(self, params: CommitParams) -> str:
        body = {
            "version": BUNDLE_VERSION, "cfg": self.cfg.to_dict(), "auth": self.auth, "k": self.k,
            "theta": self.theta, "m": self.m, "R": self.R, "bounds": self.bounds(),
            "seed": params.seed.hex(), "label": params.label.hex(),
        }
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


class _Walker:
    """Shared circuit walk; subclasses either produce or consume records."""

    prover = False

    def __init__(self, params: CommitParams, transcript: Transcript, settings: AuthSettings):
        self.params = params
        self.t = transcript
        self.s = settings
        self.claims: list = []
        self.slot = 0
        self._gadgets: dict = {}
        self.series_nodes: list[Node] = []

    # primitives supplied by subclasses: square, abs_open, zero_check, bit

    def label(self) -> bytes:
        self.slot += 1
        return b"slot:%d" % self.slot

    def claim(self, node: Node, bound: int):
        self.claims.append((node, bound))

    def abs(self, diff: Node) -> Node:
        s = self.abs_open(diff)
        sq_s = self.square(s)
        sq_d = self.square(diff)
        self.zero_check(sq_s, sq_d)
        self.claim(s, self.s.cfg.K)
        return s

    def max(self, nodes: list[Node], bound: int) -> Node:
        cur = nodes[0]
        for nd in nodes[1:]:
            # ties keep the lower-index child
            take = self.bit(None if cur.value is None else int(nd.value > cur.value))
            win, lose = (nd, cur) if take else (cur, nd)
            self.claim(win - lose, bound)
            cur = win
        return cur

    def local(self, key, a: list[Node], b: list[Node]) -> Node:
        if key in self._gadgets:
            return self._gadgets[key]
        diffs = [x - y for x, y in zip(a, b)]
        kind = self.s.cfg.local
        if kind == "squared_euclidean":
            out = node_sum(self.params, [self.square(d) for d in diffs], self.prover)
        else:
            absd = [self.abs(d) for d in diffs]
            if kind == "manhattan":
                out = node_sum(self.params, absd, self.prover)
            else:
                out = self.max(absd, self.s.cfg.K)
        self._gadgets[key] = out
        return out

    def series(self, idx: int, base: list[list[Node]], fresh: list[list[Node]], pairs,
               fresh_plain: TimeSeries) -> Node:
        cfg = self.s.cfg
        pub = lambda v: public_node(self.params, v, self.prover)  # noqa: E731
        edges = []
        prev = None
        for i, j in pairs:
            if cfg.series != "twed" or prev is None:
                edges.append(self.local(("xy", idx, i, j), base[i - 1], fresh[j - 1]))
            else:
                di, dj = i - prev[0], j - prev[1]
                if di and dj:
                    edges.append(self.local(("xy", idx, i, j), base[i - 1], fresh[j - 1])
                                 + self.local(("xy", idx, i - 1, j - 1), base[i - 2], fresh[j - 2]))
                elif di:
                    edges.append(pub(cfg.lam) + self.local(("xx", idx, i), base[i - 1], base[i - 2]))
                else:
                    ys = fresh_plain.points
                    edges.append(pub(cfg.lam + local_distance(ys[j - 1], ys[j - 2], cfg)))
            prev = (i, j)
        if cfg.series == "frechet":
            return self.max(edges, cfg.local_bound(self.s.m))
        return node_sum(self.params, edges, self.prover)

    def run(self, indices, bases, fresh_nodes, pairs_list, fresh_plain):
        for idx, base, pairs in zip(indices, bases, pairs_list):
            self.series_nodes.append(self.series(idx, base, fresh_nodes, pairs, fresh_plain))
        top = self.s.theta - 1
        limit = public_node(self.params, top, self.prover)
        if self.s.auth == "knn_max":
            for nd in self.series_nodes:
                self.claim(limit - nd, top)
        else:
            self.claim(limit - node_sum(self.params, self.series_nodes, self.prover), top)


class _ProverWalk(_Walker):
    prover = True

    def __init__(self, *a):
        super().__init__(*a)
        self.records: list[dict] = []

    def square(self, x: Node) -> Node:
        r = random_scalar()
        c = commit(self.params, x.value * x.value, r)
        proof = zkmp_prove(self.params, self.t, (x.c, x.c, c), (x.value, x.value, x.rand, x.rand, r),
                           self.label())
        self.records.append({"t": "sq", "c": c.hex(), "p": proof.to_dict()})
        return Node(c, x.value * x.value, r)

    def abs_open(self, diff: Node) -> Node:
        r = random_scalar()
        v = abs(diff.value)
        c = commit(self.params, v, r)
        self.t.append_point(b"abs", c)
        self.records.append({"t": "abs", "c": c.hex()})
        return Node(c, v, r)

    def zero_check(self, a: Node, b: Node):
        self.records.append({"t": "zero", "z": scalar_bytes(a.rand - b.rand).hex()})

    def bit(self, b):
        self.t.append(b"bit", bytes([b]))
        self.records.append({"t": "bit", "b": b})
        return b


class _VerifierWalk(_Walker):
    def __init__(self, params, transcript, settings, records):
        super().__init__(params, transcript, settings)
        self._records = records
        self._pos = 0

    def _next(self, kind: str) -> dict:
        if self._pos >= len(self._records):
            raise Reject("bundle is missing sub-proofs")
        rec = self._records[self._pos]
        self._pos += 1
        if not isinstance(rec, dict) or rec.get("t") != kind:
            raise Reject(f"sub-proof {self._pos} has the wrong type")
        return rec

    def finished(self) -> bool:
        return self._pos == len(self._records)

    def square(self, x: Node) -> Node:
        rec = self._next("sq")
        c = Commitment.from_hex(rec["c"])
        proof = ZkmpProof.from_dict(rec["p"])
        if not zkmp_verify(self.params, self.t, (x.c, x.c, c), proof, self.label()):
            raise Reject(f"multiplication proof {self.slot} failed")
        return Node(c)

    def abs_open(self, diff: Node) -> Node:
        c = Commitment.from_hex(self._next("abs")["c"])
        self.t.append_point(b"abs", c)
        return Node(c)

    def zero_check(self, a: Node, b: Node):
        z = decode_scalar(bytes.fromhex(self._next("zero")["z"]))
        if a.c - b.c != commit(self.params, 0, z):
            raise Reject("absolute-value squares differ")

    def bit(self, _):
        b = self._next("bit")["b"]
        if type(b) is not int or b not in (0, 1):
            raise Reject("branch bit is not 0 or 1")
        self.t.append(b"bit", bytes([b]))
        return b


# ---------------------------------------------------------------- bundle

@dataclass
class AuthProofBundle:
    fingerprint: str
    auth: str
    k: int
    indices: list[int]
    pairs: list[list[tuple[int, int]]]
    fresh_randomness: list[list[int]]
    records: list[dict]
    range_proof: SharpBatchProof
    meta: dict = field(default_factory=dict)
    version: int = BUNDLE_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "fingerprint": self.fingerprint,
            "auth": self.auth,
            "k": self.k,
            "indices": list(self.indices),
            "pairs": [[list(p) for p in ps] for ps in self.pairs],
            "fresh_randomness": [[scalar_bytes(r).hex() for r in row] for row in self.fresh_randomness],
            "records": self.records,
            "range_proof": self.range_proof.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuthProofBundle":
        try:
            return cls(
                version=int(d["version"]),
                fingerprint=str(d["fingerprint"]),
                auth=str(d["auth"]),
                k=int(d["k"]),
                indices=[int(i) for i in d["indices"]],
                pairs=[[(int(i), int(j)) for i, j in ps] for ps in d["pairs"]],
                fresh_randomness=[[decode_scalar(bytes.fromhex(r)) for r in row]
                                  for row in d["fresh_randomness"]],
                records=list(d["records"]),
                range_proof=SharpBatchProof.from_dict(d["range_proof"]),
                meta=dict(d.get("meta", {})),
            )
        except MALFORMED as exc:
            raise ValueError(f"malformed bundle: {exc}") from exc

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuthProofBundle":
        return cls.from_dict(json.loads(data))


def _bind_header(t: Transcript, fingerprint: str, meta, indices, pairs_list, base_comms, fresh_comms):
    t.append(b"fingerprint", bytes.fromhex(fingerprint))
    t.append(b"meta", json.dumps(meta, sort_keys=True).encode())
    t.append(b"indices", json.dumps(list(indices)).encode())
    for idx, pairs, rows in zip(indices, pairs_list, base_comms):
        t.append(b"pairs", json.dumps([list(p) for p in pairs]).encode())
        for row in rows:
            for c in row:
                t.append_point(b"base", c)
    for row in fresh_comms:
        for c in row:
            t.append_point(b"fresh", c)


# ---------------------------------------------------------------- prover API

def select_k_nearest(base: list[TimeSeries], fresh: TimeSeries, cfg: DistanceConfig, k: int):
    """The ``k`` closest base readings (ties -> lower index) with distances and witnesses."""
    if not base:
        raise ValueError("empty base set")
    if not 1 <= k <= len(base):
        raise ValueError(f"k must be in [1, {len(base)}]")
    scored = []
    for i, b in enumerate(base):
        d, w = series_distance(b, fresh, cfg)
        scored.append((d, i, w))
    scored.sort(key=lambda s: (s[0], s[1]))
    top = scored[:k]
    return [i for _, i, _ in top], [d for d, _, _ in top], [w for _, _, w in top]


def auth_distance(distances, auth: str) -> int:
    return max(distances) if auth == "knn_max" else sum(distances)


def build_auth_proof(params: CommitParams, base: list[CommittedSeries], fresh: TimeSeries,
                     cfg: DistanceConfig, auth: str, k: int, theta: int, R: int = DEFAULT_R,
                     cache: PrimeCache | None = None, meta: dict | None = None,
                     trace: list | None = None) -> AuthProofBundle:
    """Prove that ``fresh`` authenticates against the committed base readings.

    Raises :class:`AuthenticationFailed` (and emits nothing) when the
    plaintext authentication distance is not below ``theta``.
    """
    settings = AuthSettings(cfg, auth, 1 if auth == "nearest" else k, theta, fresh.m, R)
    for b in base:
        if b.series.m != fresh.m:
            raise SeriesError("dimension mismatch between base and fresh readings")
    indices, dists, wits = select_k_nearest([b.series for b in base], fresh, cfg, settings.k)
    if auth_distance(dists, auth) >= theta:
        raise AuthenticationFailed()
    order = sorted(range(len(indices)), key=lambda p: indices[p])
    indices = [indices[p] for p in order]
    wits = [wits[p] for p in order]
    return prove_with_witnesses(params, base, fresh, settings, indices, wits, cache, meta, trace)


def prove_with_witnesses(params, base, fresh, settings: AuthSettings, indices, wits,
                         cache=None, meta=None, trace=None) -> AuthProofBundle:
    """Prove with caller-chosen indices and couplings (no threshold pre-check)."""
    cfg = settings.cfg
    for idx, w in zip(indices, wits):
        if not validate_coupling(w, base[idx].series.T, fresh.T, cfg.series, cfg.band):
            raise SeriesError(f"invalid coupling for base reading {idx}")
    fresh_c = commit_series(params, fresh)
    fp = settings.fingerprint(params)
    pairs_list = [list(w.pairs) for w in wits]
    meta = dict(meta or {})
    t = Transcript(DOMAIN)
    _bind_header(t, fp, meta, indices, pairs_list, [base[i].commitments for i in indices], fresh_c.commitments)
    walk = _ProverWalk(params, t, settings)
    walk.run(indices, [base[i].nodes() for i in indices], fresh_c.nodes(), pairs_list, fresh)
    claims = [RangeClaim(nd.c, b, nd.value, nd.rand) for nd, b in walk.claims]
    proof = sharp_prove_batch(params, t, claims, settings.R, cache)
    if trace is not None:
        trace.extend((i, nd.value, nd.rand, nd.c) for i, nd in zip(indices, walk.series_nodes))
    return AuthProofBundle(fp, settings.auth, settings.k, list(indices), pairs_list,
                           fresh_c.randomness, walk.records, proof, meta)


# ---------------------------------------------------------------- verifier API

def verify_auth_proof_detailed(params: CommitParams, board_commitments, fresh: TimeSeries,
                               bundle: AuthProofBundle, cfg: DistanceConfig, theta: int,
                               auth: str | None = None, k: int | None = None,
                               R: int = DEFAULT_R) -> tuple[bool, str]:
    """Like :func:`verify_auth_proof` but also returns the first failing check."""
    try:
        _verify(params, board_commitments, fresh, bundle, cfg, theta, auth, k, R)
    except Reject as exc:
        return False, str(exc)
    except MALFORMED as exc:
        return False, f"malformed bundle: {exc}"
    return True, "ok"


def verify_auth_proof(params, board_commitments, fresh, bundle, cfg, theta, auth=None, k=None,
                      R: int = DEFAULT_R) -> bool:
    ok, reason = verify_auth_proof_detailed(params, board_commitments, fresh, bundle, cfg, theta,
                                            auth, k, R)
    if not ok:
        log.info("authentication proof rejected: %s", reason)
    return ok


def _verify(params, board_commitments, fresh, bundle, cfg, theta, auth, k, R):
    if not isinstance(bundle, AuthProofBundle) or bundle.version != BUNDLE_VERSION:
        raise Reject("unsupported bundle")
    auth = auth or bundle.auth
    k = k or bundle.k
    if bundle.auth != auth or bundle.k != k:
        raise Reject("authentication mode or k differs from the verifier's")
    try:
        settings = AuthSettings(cfg, auth, k, theta, fresh.m, R)
    except ValueError as exc:
        raise Reject(str(exc)) from exc
    if bundle.fingerprint != settings.fingerprint(params):
        raise Reject("configuration fingerprint mismatch")

    n = len(board_commitments)
    idx = bundle.indices
    if len(idx) != k or len(bundle.pairs) != k or idx != sorted(set(idx)) or not all(0 <= i < n for i in idx):
        raise Reject("selected indices are invalid")
    bases = [board_commitments[i] for i in idx]
    for rows in bases:
        if not rows or any(len(r) != fresh.m for r in rows):
            raise Reject("board commitments have the wrong shape")

    # fresh reading recomputed from the plaintext and shipped randomness
    fr = bundle.fresh_randomness
    if len(fr) != fresh.T or any(len(row) != fresh.m for row in fr):
        raise Reject("fresh-reading randomness has the wrong shape")
    fresh_c = commit_series(params, fresh, fr)

    for rows, pairs in zip(bases, bundle.pairs):
        w = CouplingWitness(pairs, [0] * len(pairs))
        if not validate_coupling(w, len(rows), fresh.T, cfg.series, cfg.band):
            raise Reject("coupling witness is invalid")

    t = Transcript(DOMAIN)
    _bind_header(t, bundle.fingerprint, bundle.meta, idx, bundle.pairs, bases, fresh_c.commitments)
    walk = _VerifierWalk(params, t, settings, bundle.records)
    base_nodes = [[[Node(c) for c in row] for row in rows] for rows in bases]
    fresh_nodes = [[Node(c) for c in row] for row in fresh_c.commitments]
    walk.run(idx, base_nodes, fresh_nodes, bundle.pairs, fresh)
    if not walk.finished():
        raise Reject("bundle carries unexpected sub-proofs")
    publics = [(nd.c, b) for nd, b in walk.claims]
    if not sharp_verify_batch(params, t, publics, bundle.range_proof, R):
        raise Reject("batched range proof failed")
