"""Zero-knowledge authentication on time-series biometrics.

Layers, bottom up: ``series`` (distances), ``group`` (commitments and
transcripts), ``zkmp`` and ``sharp`` (multiplication and batched range
proofs), ``circuit`` (authentication proofs), ``protocol`` (board,
registration, sessions) and ``evaluation`` (metrics and benchmarks).
"""
from zkseries.circuit import (
    AuthenticationFailed,
    AuthProofBundle,
    build_auth_proof,
    commit_series,
    select_k_nearest,
    verify_auth_proof,
)
from zkseries.group import CommitParams, Commitment, Transcript, commit, setup_params
from zkseries.kernels import BACKEND
from zkseries.protocol import ProtocolConfig, prove_authentication, register, verify_authentication
from zkseries.series import DistanceConfig, TimeSeries, series_distance

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AuthProofBundle", "AuthenticationFailed", "CommitParams", "Commitment",
    "DistanceConfig", "ProtocolConfig", "TimeSeries", "Transcript", "build_auth_proof", "commit",
    "commit_series", "prove_authentication", "register", "select_k_nearest", "series_distance",
    "setup_params", "verify_auth_proof", "verify_authentication",
]
