"""Canonical hashing helpers shared by every module that fingerprints inputs.

Two flavors:
  * canonical_digest: sha256 over a canonical JSON rendering, for configs,
    tokenizer specs, and cache keys.
  * MultisetHash: order-independent combination of per-item digests, so a
    corpus hash is identical no matter how chunks were partitioned across
    workers.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

_MULTISET_MOD = 1 << 256


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def canonical_digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class MultisetHash:
    """Commutative hash over a multiset of items.

    Item digests are summed modulo 2**256, so duplicates contribute twice and
    insertion order never matters. Two MultisetHashes combine additively,
    which makes the merge of partition hashes equal the single-pass hash.
    """

    def __init__(self, value: int = 0) -> None:
        self.value = value % _MULTISET_MOD

    def add(self, obj: Any) -> None:
        digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).digest()
        self.value = (self.value + int.from_bytes(digest, "big")) % _MULTISET_MOD

    def combine(self, other: "MultisetHash") -> None:
        self.value = (self.value + other.value) % _MULTISET_MOD

    def hexdigest(self) -> str:
        return format(self.value, "064x")
