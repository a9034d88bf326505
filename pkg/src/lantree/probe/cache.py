"""Persistent content-addressed cache for probe responses.

Keys are sha256 digests of the canonical request (model id, context, top_m),
values are the raw wire payloads, so a hit is byte-identical to the network
response. Corrupt entries degrade to a miss with a warning, never an error.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Optional

from lantree.hashing import canonical_digest

log = logging.getLogger(__name__)

CACHE_DIR_ENV = "LANTREE_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_DIR_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "lantree"


class ProbeCache:
    def __init__(self, cache_dir: str | Path | None = None) -> None:
        self.cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(model_id: str, request_kind: str, body: dict) -> str:
        return canonical_digest({"model": model_id, "kind": request_kind, "body": body})

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, key: str) -> Optional[dict[str, Any]]:
        path = self._path(key)
        if not path.exists():
            self.misses += 1
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            log.warning("corrupt cache entry %s (%s); treating as miss", path.name, e)
            self.misses += 1
            return None
        self.hits += 1
        return payload

    def put(self, key: str, payload: dict[str, Any]) -> None:
        path = self._path(key)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)
