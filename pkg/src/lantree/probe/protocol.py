"""Wire protocol types for the model-probe HTTP+JSON interface.

Endpoints (field names are part of the contract):
    POST /v1/next_token_distribution
        {"model": str, "context": [int], "top_m": int}
        -> {"entries": [{"token": int, "logprob": float}], "truncated_logmass": float}
    POST /v1/generate
        {"model": str, "prompt": [int], "max_new": int, "stop": [int]}
        -> {"tokens": [int]}
    POST /v1/tokenize    {"model": str, "text": str}     -> {"tokens": [int]}
    POST /v1/detokenize  {"model": str, "tokens": [int]} -> {"text": str}
    GET  /v1/info?model=ID
        -> {"model": str, "vocab_size": int, "context_window": int, "tokenizer_hash": str}

Probabilities travel as log-probabilities and are exponentiated client-side.
A truncated mass of exactly zero is carried as LOGMASS_ZERO (a finite stand-in
for -inf, chosen so exp() underflows to 0.0 and the JSON stays strict).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from lantree.errors import ProbeError

LOGMASS_ZERO = -1e30
MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ProbeRequest:
    context: list[int]
    top_m: int

    def __post_init__(self) -> None:
        if self.top_m < 1:
            raise ValueError("top_m must be >= 1")
        if not self.context:
            raise ValueError("context must be non-empty")


@dataclass(frozen=True)
class BackendDescriptor:
    endpoint: str
    model_id: str
    tokenizer_hash: str

    def as_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model_id": self.model_id,
            "tokenizer_hash": self.tokenizer_hash,
        }


@dataclass(frozen=True)
class NextTokenDist:
    """Truncated next-token distribution: entries sorted by probability
    descending (ties by ascending token id) plus the unreturned mass."""

    entries: tuple[tuple[int, float], ...] = field(default_factory=tuple)
    truncated_mass: float = 0.0

    @property
    def argmax(self) -> int | None:
        return self.entries[0][0] if self.entries else None

    def total_mass(self) -> float:
        return sum(p for _t, p in self.entries) + self.truncated_mass


def log_prob(p: float) -> float:
    return math.log(p) if p > 0.0 else LOGMASS_ZERO


def make_next_token_response(entries: list[tuple[int, float]], truncated_mass: float) -> dict:
    """Build the wire payload from exact probabilities (server/fake side)."""
    return {
        "entries": [{"token": t, "logprob": log_prob(p)} for t, p in entries],
        "truncated_logmass": log_prob(truncated_mass),
    }


def parse_next_token_response(payload: dict) -> NextTokenDist:
    """Parse and validate a wire payload; raises ProbeError on any violation
    of the distribution contract."""
    try:
        raw_entries = payload["entries"]
        truncated_logmass = float(payload["truncated_logmass"])
        entries = tuple((int(e["token"]), math.exp(float(e["logprob"]))) for e in raw_entries)
        truncated_mass = math.exp(truncated_logmass)
    except (KeyError, TypeError, ValueError, OverflowError) as e:
        raise ProbeError(f"malformed next_token_distribution payload: {e}") from e
    for token, p in entries:
        if token < 0:
            raise ProbeError(f"negative token id {token} in distribution")
        if not (0.0 <= p <= 1.0 + MASS_TOLERANCE):
            raise ProbeError(f"probability out of range for token {token}: {p}")
    if truncated_mass > 1.0 + MASS_TOLERANCE:
        raise ProbeError(f"truncated mass out of range: {truncated_mass}")
    for (t_a, p_a), (t_b, p_b) in zip(entries, entries[1:]):
        if p_b > p_a or (p_b == p_a and t_b <= t_a):
            raise ProbeError("entries are not sorted by descending probability / ascending id")
    dist = NextTokenDist(entries=entries, truncated_mass=truncated_mass)
    if abs(dist.total_mass() - 1.0) > MASS_TOLERANCE:
        raise ProbeError(f"distribution mass {dist.total_mass()} not within 1e-6 of 1")
    return dist
