"""Registration, authentication sessions and the hash-chained bulletin board.

Board file (JSON)::

    {"version": 1, "entries": [genesis, entry_1, ...]}

Every entry carries ``seq``, ``user``, ``commitments`` (flat, hex, reading
by reading in time-then-coordinate order), ``meta`` (shapes, normalization
bounds, ...), ``prev`` and ``hash = sha256(canonical json of the rest)``.
The genesis entry (seq 0, empty user) pins the commitment parameters.
Appends take an exclusive ``flock`` on ``<board>.lock`` and are rejected
when the caller's view of the tail is stale.
"""
from __future__ import annotations

import configparser
import fcntl
import hashlib
import json
import logging
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from zkseries.circuit import (
    AuthProofBundle,
    CommittedSeries,
    build_auth_proof,
    commit_series,
    verify_auth_proof_detailed,
)
from zkseries.group import (
    DEFAULT_SEED,
    CommitParams,
    Commitment,
    decode_scalar,
    scalar_bytes,
    setup_params,
)
from zkseries.series import DistanceConfig, TimeSeries, compute_min_max, load_series, read_reading
from zkseries.sharp import DEFAULT_R, get_prime_cache

log = logging.getLogger(__name__)

BOARD_VERSION = 1
RECORD_VERSION = 1
ZERO_HASH = "00" * 32
READING_SUFFIXES = (".csv", ".json")


class BoardConflictError(RuntimeError):
    """The board tail moved since the caller read it; retry."""


class ProtocolError(RuntimeError):
    """Missing or inconsistent protocol state (records, boards, configs)."""


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ProtocolConfig:
    distance: DistanceConfig = field(default_factory=DistanceConfig)
    auth: str = "knn_sum"
    k: int = 1
    R: int = DEFAULT_R
    seed: bytes = DEFAULT_SEED
    cache: str | None = None

    def to_dict(self) -> dict:
        d = self.distance.to_dict()
        d.update({"auth": self.auth, "k": self.k, "R": self.R,
                  "seed": self.seed.decode("latin-1"), "cache": self.cache})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        seed = d.get("seed")
        return cls(
            distance=DistanceConfig.from_dict(d),
            auth=d.get("auth", "knn_sum"),
            k=int(d.get("k", 1)),
            R=int(d.get("R", DEFAULT_R)),
            seed=DEFAULT_SEED if seed is None else str(seed).encode("latin-1"),
            cache=d.get("cache"),
        )

    def params(self) -> CommitParams:
        return setup_params(self.seed)

    def prime_cache(self):
        return get_prime_cache(self.cache)


def load_config(path) -> ProtocolConfig:
    """JSON, or ``key = value`` lines (values parsed as JSON when possible)."""
    text = Path(path).read_text()
    if Path(path).suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return ProtocolConfig.from_dict(json.loads(text))
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string("[config]\n" + text)
    raw = {}
    for key, value in cp["config"].items():
        try:
            raw[key] = json.loads(value)
        except json.JSONDecodeError:
            raw[key] = value.strip().strip('"')
    return ProtocolConfig.from_dict(raw)


# ---------------------------------------------------------------- board

@dataclass(frozen=True)
class BoardEntry:
    seq: int
    user: str
    commitments: tuple[str, ...]
    meta: dict
    prev: str
    hash: str = ""

    def body(self) -> dict:
        return {"seq": self.seq, "user": self.user, "commitments": list(self.commitments),
                "meta": self.meta, "prev": self.prev}

    def compute_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.body())).hexdigest()

    def sealed(self) -> "BoardEntry":
        return BoardEntry(self.seq, self.user, self.commitments, self.meta, self.prev, self.compute_hash())

    def to_dict(self) -> dict:
        d = self.body()
        d["hash"] = self.hash
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoardEntry":
        return cls(int(d["seq"]), str(d["user"]), tuple(str(c) for c in d["commitments"]),
                   dict(d["meta"]), str(d["prev"]), str(d["hash"]))

    def readings(self) -> list[list[list[Commitment]]]:
        """Commitments regrouped per reading as ``[T][m]`` lists."""
        out, pos = [], 0
        for T, m in self.meta["shapes"]:
            rows = []
            for _ in range(T):
                rows.append([Commitment.from_hex(h) for h in self.commitments[pos:pos + m]])
                pos += m
            out.append(rows)
        if pos != len(self.commitments):
            raise ProtocolError("entry shapes do not cover its commitments")
        return out


def genesis_entry(params: CommitParams) -> BoardEntry:
    meta = {"kind": "genesis", "params_seed": params.seed.hex(), "params_label": params.label.hex()}
    return BoardEntry(0, "", (), meta, ZERO_HASH).sealed()


@dataclass
class Board:
    entries: list[BoardEntry]

    @property
    def tail_hash(self) -> str:
        return self.entries[-1].hash

    def to_dict(self) -> dict:
        return {"version": BOARD_VERSION, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "Board":
        if d.get("version") != BOARD_VERSION:
            raise ProtocolError("unsupported board version")
        return cls([BoardEntry.from_dict(e) for e in d["entries"]])

    def find(self, seq: int) -> BoardEntry:
        for e in self.entries:
            if e.seq == seq:
                return e
        raise ProtocolError(f"no board entry {seq}")

    def params_seed(self) -> bytes:
        return bytes.fromhex(self.entries[0].meta["params_seed"])


def board_verify_chain(board: Board) -> tuple[bool, int | None]:
    """Walk from genesis; returns ``(True, None)`` or ``(False, offending seq)``."""
    if not board.entries:
        return False, 0
    prev = ZERO_HASH
    for i, e in enumerate(board.entries):
        if e.seq != i or e.prev != prev or e.compute_hash() != e.hash:
            return False, i
        if i == 0 and (e.user or e.commitments or e.meta.get("kind") != "genesis"):
            return False, 0
        prev = e.hash
    return True, None


def load_board(path) -> Board:
    return Board.from_dict(json.loads(Path(path).read_text()))


def _atomic_write(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


@contextmanager
def _locked(path: Path):
    with open(str(path) + ".lock", "a+") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(lock, fcntl.LOCK_UN)


def init_board(path, params: CommitParams) -> Board:
    path = Path(path)
    with _locked(path):
        if path.exists():
            board = load_board(path)
            if board.params_seed() != params.seed:
                raise ProtocolError("board was created for different commitment parameters")
            return board
        board = Board([genesis_entry(params)])
        _atomic_write(path, json.dumps(board.to_dict(), indent=1).encode())
        return board


def board_append(path, entry: BoardEntry) -> BoardEntry:
    """Append ``entry`` (its ``prev`` must be the current tail hash); returns the sealed entry."""
    path = Path(path)
    with _locked(path):
        board = load_board(path)
        ok, bad = board_verify_chain(board)
        if not ok:
            raise ProtocolError(f"board chain broken at entry {bad}")
        if entry.prev != board.tail_hash:
            raise BoardConflictError("stale board tail; re-read the board and retry")
        sealed = BoardEntry(len(board.entries), entry.user, entry.commitments, entry.meta,
                            entry.prev).sealed()
        board.entries.append(sealed)
        _atomic_write(path, json.dumps(board.to_dict(), indent=1).encode())
        return sealed


# ---------------------------------------------------------------- registration

@dataclass
class RegistrationRecord:
    """Prover-side secret store: base plaintexts and blinding."""

    user: str
    params_seed: bytes
    readings: list[CommittedSeries]
    entry_seq: int
    entry_hash: str
    min_max: list | None = None
    # the threat model assumes disk encryption on the prover's device
    storage: str = "plaintext; host disk encryption assumed"

    def to_dict(self) -> dict:
        return {
            "version": RECORD_VERSION,
            "user": self.user,
            "params_seed": self.params_seed.hex(),
            "entry_seq": self.entry_seq,
            "entry_hash": self.entry_hash,
            "min_max": self.min_max,
            "storage": self.storage,
            "readings": [{"points": [list(p) for p in cs.series.points],
                          "randomness": [[scalar_bytes(r).hex() for r in row] for row in cs.randomness]}
                         for cs in self.readings],
        }

    @classmethod
    def from_dict(cls, d: dict, params: CommitParams | None = None) -> "RegistrationRecord":
        if d.get("version") != RECORD_VERSION:
            raise ProtocolError("unsupported record version")
        seed = bytes.fromhex(d["params_seed"])
        params = params or setup_params(seed)
        readings = []
        for r in d["readings"]:
            rand = [[decode_scalar(bytes.fromhex(h)) for h in row] for row in r["randomness"]]
            readings.append(commit_series(params, TimeSeries(r["points"]), rand))
        mm = d.get("min_max")
        return cls(d["user"], seed, readings, int(d["entry_seq"]), d["entry_hash"],
                   None if mm is None else [tuple(b) for b in mm], d.get("storage", ""))

    def check(self, entry: BoardEntry) -> bool:
        """Every board commitment recomputes from the stored plaintext and randomness."""
        flat = [c.hex() for cs in self.readings for row in cs.commitments for c in row]
        shapes = [[cs.series.T, cs.series.m] for cs in self.readings]
        return (entry.user == self.user and entry.hash == self.entry_hash
                and list(entry.commitments) == flat and entry.meta.get("shapes") == shapes)


def register(user: str, base_readings: list[TimeSeries], params: CommitParams, board_path,
             min_max=None, expected_prev: str | None = None) -> tuple[RegistrationRecord, BoardEntry]:
    """Commit the base readings and append them to the board as one entry."""
    if not user:
        raise ProtocolError("user id must be nonempty")
    if not base_readings:
        raise ProtocolError("at least one base reading is required")
    if len({r.m for r in base_readings}) != 1:
        raise ProtocolError("base readings have different dimensions")
    board = init_board(board_path, params)
    committed = [commit_series(params, r) for r in base_readings]
    meta = {"kind": "registration", "shapes": [[r.T, r.m] for r in base_readings],
            "min_max": None if min_max is None else [list(b) for b in min_max]}
    flat = tuple(c.hex() for cs in committed for row in cs.commitments for c in row)
    prev = board.tail_hash if expected_prev is None else expected_prev
    entry = board_append(board_path, BoardEntry(0, user, flat, meta, prev))
    record = RegistrationRecord(user, params.seed, committed, entry.seq, entry.hash,
                                None if min_max is None else [tuple(b) for b in min_max])
    return record, entry


def save_record(record: RegistrationRecord, path):
    _atomic_write(Path(path), json.dumps(record.to_dict(), indent=1).encode())


def load_record(path) -> RegistrationRecord:
    path = Path(path)
    if not path.exists():
        raise ProtocolError(f"registration record {path} not found")
    return RegistrationRecord.from_dict(json.loads(path.read_text()))


def reading_files(directory) -> list[Path]:
    files = sorted(p for p in Path(directory).iterdir()
                   if p.suffix.lower() in READING_SUFFIXES and p.name != "min_max.json")
    if not files:
        raise ProtocolError(f"no readings in {directory}")
    return files


def load_readings_dir(directory, K: int):
    """Readings of one user plus the normalization bounds used for them.

    A ``min_max.json`` sidecar wins; integer data already in ``[0, K]`` is
    taken as normalized; anything else is scaled by the per-signal bounds of
    the readings themselves.
    """
    files = reading_files(directory)
    raws = [read_reading(f) for f in files]
    sidecar = Path(directory) / "min_max.json"
    if sidecar.exists():
        data = json.loads(sidecar.read_text())
        mm = [(lo, hi) for lo, hi in zip(data["min"], data["max"])]
    elif all(isinstance(v, int) and 0 <= v <= K for raw in raws for row in raw for v in row):
        mm = None
    else:
        mm = compute_min_max(raws)
    return [load_series(f, mm, K) for f in files], mm


# ---------------------------------------------------------------- sessions

def prove_authentication(record: RegistrationRecord, fresh_path, config: ProtocolConfig, theta: int,
                         k: int | None = None, out_path=None) -> AuthProofBundle:
    """Build and (optionally) write a bundle; nothing is written on failure."""
    params = setup_params(record.params_seed)
    if params.seed != config.seed:
        raise ProtocolError("record and configuration use different commitment parameters")
    fresh = load_series(fresh_path, record.min_max, config.distance.K)
    meta = {"user": record.user, "entry_seq": record.entry_seq, "entry_hash": record.entry_hash}
    bundle = build_auth_proof(params, record.readings, fresh, config.distance, config.auth,
                              k or config.k, theta, config.R, config.prime_cache(), meta)
    if out_path is not None:
        _atomic_write(Path(out_path), bundle.canonical_bytes())
    return bundle


def verify_authentication(board_path, bundle_path, fresh_path, config: ProtocolConfig,
                          theta: int, k: int | None = None) -> tuple[bool, str]:
    """Accept/reject plus the name of the first failing check."""
    try:
        board = load_board(board_path)
    except (OSError, ValueError, KeyError, TypeError, ProtocolError) as exc:
        return False, f"board unreadable: {exc}"
    ok, bad = board_verify_chain(board)
    if not ok:
        return False, f"board chain broken at entry {bad}"
    params = config.params()
    if board.params_seed() != params.seed:
        return False, "board pins different commitment parameters"
    try:
        bundle = AuthProofBundle.from_bytes(Path(bundle_path).read_bytes())
    except (OSError, ValueError) as exc:
        return False, f"bundle unreadable: {exc}"
    meta = bundle.meta
    try:
        entry = board.find(int(meta["entry_seq"]))
    except (KeyError, TypeError, ValueError, ProtocolError):
        return False, "bundle does not reference a board entry"
    if set(meta) != {"user", "entry_seq", "entry_hash"} or entry.seq == 0 \
            or entry.user != meta["user"] or entry.hash != meta["entry_hash"]:
        return False, "bundle reference does not match the board entry"
    try:
        commitments = entry.readings()
        mm = entry.meta.get("min_max")
        fresh = load_series(fresh_path, None if mm is None else [tuple(b) for b in mm],
                            config.distance.K)
    except (OSError, ValueError, KeyError, TypeError, ProtocolError) as exc:
        return False, f"inputs unreadable: {exc}"
    return verify_auth_proof_detailed(params, commitments, fresh, bundle, config.distance, theta,
                                      config.auth, 1 if config.auth == "nearest" else (k or config.k),
                                      config.R)
