"""Client side of the probe protocol: transports, retries, caching, and
bounded-concurrency batch probing."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence

from lantree.errors import ProbeError
from lantree.probe.cache import ProbeCache
from lantree.probe.protocol import (
    BackendDescriptor,
    NextTokenDist,
    parse_next_token_response,
)

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.25  # seconds, doubled per attempt


class HttpTransport:
    """requests-based transport with exponential-backoff retries.

    Probing is batch work: robustness beats latency, so transient transport
    and 5xx failures are retried three times before giving up.
    """

    def __init__(self, base_url: str, timeout: float = 30.0, session=None) -> None:
        import requests

        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._requests = requests

    @property
    def endpoint(self) -> str:
        return self.base_url

    def _attempt(self, send):
        delay = RETRY_BASE_DELAY
        last: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            try:
                resp = send()
            except self._requests.RequestException as e:
                last = e
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()
                    except ValueError as e:
                        raise ProbeError(f"non-JSON response: {e}") from e
                if 400 <= resp.status_code < 500:
                    raise ProbeError(f"backend rejected request ({resp.status_code}): {resp.text}")
                last = ProbeError(f"backend error {resp.status_code}: {resp.text}")
            if attempt < RETRY_ATTEMPTS - 1:
                time.sleep(delay)
                delay *= 2
        raise ProbeError(f"backend unreachable after {RETRY_ATTEMPTS} attempts: {last}")

    def post(self, path: str, body: dict) -> dict:
        url = self.base_url + path
        return self._attempt(lambda: self.session.post(url, json=body, timeout=self.timeout))

    def get(self, path: str, params: Optional[dict] = None) -> dict:
        url = self.base_url + path
        return self._attempt(lambda: self.session.get(url, params=params, timeout=self.timeout))


class ProbeClient:
    """Typed access to one model behind a transport.

    Thread-safe; batch probes run through a pool bounded at
    ``max_in_flight`` outstanding requests. Distribution responses are cached
    content-addressed when a ProbeCache is supplied, and cached payloads are
    replayed through the same parser so downstream results are byte-identical
    either way.
    """

    def __init__(
        self,
        transport,
        model_id: str,
        cache: Optional[ProbeCache] = None,
        max_in_flight: int = 8,
    ) -> None:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.transport = transport
        self.model_id = model_id
        self.cache = cache
        self.max_in_flight = max_in_flight
        self._info: Optional[dict] = None

    # -- metadata ---------------------------------------------------------
    def info(self) -> dict:
        if self._info is None:
            self._info = self.transport.get("/v1/info", params={"model": self.model_id})
        return self._info

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(
            endpoint=getattr(self.transport, "endpoint", "inproc"),
            model_id=self.model_id,
            tokenizer_hash=str(self.info().get("tokenizer_hash", "")),
        )

    def descriptor_dict(self) -> dict:
        return self.descriptor().as_dict()

    # -- probing ----------------------------------------------------------
    def next_token_dist(self, context: Sequence[int], top_m: int) -> NextTokenDist:
        if top_m < 1:
            raise ValueError("top_m must be >= 1")
        if not context:
            raise ValueError("context must be non-empty")
        body = {"model": self.model_id, "context": list(context), "top_m": top_m}
        payload = None
        key = None
        if self.cache is not None:
            key = ProbeCache.key(self.model_id, "next_token_distribution", body)
            payload = self.cache.get(key)
        if payload is None:
            payload = self.transport.post("/v1/next_token_distribution", body)
            if self.cache is not None and key is not None:
                self.cache.put(key, payload)
        return parse_next_token_response(payload)

    def next_token_dist_many(
        self, contexts: Iterable[Sequence[int]], top_m: int
    ) -> list[NextTokenDist]:
        contexts = list(contexts)
        if len(contexts) <= 1 or self.max_in_flight == 1:
            return [self.next_token_dist(c, top_m) for c in contexts]
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            return list(pool.map(lambda c: self.next_token_dist(c, top_m), contexts))

    def greedy_generate(
        self, prompt: Sequence[int], max_new: int, stop: Iterable[int] = ()
    ) -> list[int]:
        if max_new < 1:
            raise ValueError("max_new must be >= 1")
        body = {
            "model": self.model_id,
            "prompt": list(prompt),
            "max_new": max_new,
            "stop": sorted(set(stop)),
        }
        payload = self.transport.post("/v1/generate", body)
        try:
            return [int(t) for t in payload["tokens"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProbeError(f"malformed generate payload: {e}") from e

    # -- text plumbing ------------------------------------------------------
    def tokenize_text(self, text: str) -> list[int]:
        payload = self.transport.post("/v1/tokenize", {"model": self.model_id, "text": text})
        try:
            return [int(t) for t in payload["tokens"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProbeError(f"malformed tokenize payload: {e}") from e

    def detokenize_tokens(self, tokens: Sequence[int]) -> str:
        payload = self.transport.post(
            "/v1/detokenize", {"model": self.model_id, "tokens": list(tokens)}
        )
        try:
            return str(payload["text"])
        except (KeyError, TypeError) as e:
            raise ProbeError(f"malformed detokenize payload: {e}") from e
