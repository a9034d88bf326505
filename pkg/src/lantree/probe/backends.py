"""In-process protocol backends.

These serve the exact same payload shapes as a remote server, which lets the
whole probe/flatten/compare loop run offline: the frequency oracle answers
with a DataTree's exact conditional frequencies, and CountingBackend wraps
any backend to audit call counts and concurrency for tests.
"""

from __future__ import annotations

import threading
from typing import Optional, Sequence

from lantree.corpus.tokenizers import Tokenizer
from lantree.data_tree import DataTree, DataTreeNode
from lantree.errors import ProbeError
from lantree.probe.protocol import make_next_token_response


class InProcessTransport:
    """Adapts a backend object to the transport interface used by ProbeClient."""

    def __init__(self, backend, endpoint: str = "inproc://backend") -> None:
        self.backend = backend
        self.endpoint = endpoint

    def post(self, path: str, body: dict) -> dict:
        if path == "/v1/next_token_distribution":
            return self.backend.next_token_distribution(
                body["model"], body["context"], body["top_m"]
            )
        if path == "/v1/generate":
            return self.backend.generate(
                body["model"], body["prompt"], body["max_new"], body.get("stop", [])
            )
        if path == "/v1/tokenize":
            return self.backend.tokenize(body["model"], body["text"])
        if path == "/v1/detokenize":
            return self.backend.detokenize(body["model"], body["tokens"])
        raise ProbeError(f"unknown endpoint {path}")

    def get(self, path: str, params: Optional[dict] = None) -> dict:
        if path == "/v1/info":
            return self.backend.info((params or {}).get("model"))
        raise ProbeError(f"unknown endpoint {path}")


class FrequencyOracleBackend:
    """Serves a DataTree's exact conditional frequencies over the protocol.

    Entry probabilities are N(context+w)/N(context); whatever the top_m cut
    leaves out (including continuations lost to chunk truncation) is reported
    as truncated mass, so the wire distribution always accounts for all mass.
    Contexts off the tree yield an empty distribution with full truncated
    mass, which downstream code treats as a dead end.
    """

    def __init__(
        self,
        tree: DataTree,
        tokenizer: Optional[Tokenizer] = None,
        model_id: str = "frequency-oracle",
        context_window: int = 1 << 16,
    ) -> None:
        self.tree = tree
        self.tokenizer = tokenizer
        self.model_id = model_id
        self.context_window = context_window

    def _check_model(self, model: str) -> None:
        if model != self.model_id:
            raise ProbeError(f"unknown model {model!r}")

    def _walk(self, context: Sequence[int]) -> Optional[DataTreeNode]:
        if not context or context[0] != self.tree.seed:
            return None
        node = self.tree.root
        if node.count == 0:
            return None
        for token in context[1:]:
            node = node.children.get(token)
            if node is None:
                return None
        return node

    def next_token_distribution(self, model: str, context: list[int], top_m: int) -> dict:
        self._check_model(model)
        if len(context) > self.context_window:
            raise ProbeError(f"context length {len(context)} exceeds window")
        node = self._walk(context)
        if node is None or node.count == 0:
            return make_next_token_response([], 1.0)
        ranked = sorted(node.children.values(), key=lambda n: (-n.count, n.token))
        chosen = ranked[:top_m]
        served = sum(c.count for c in chosen)
        entries = [(c.token, c.count / node.count) for c in chosen]
        truncated = (node.count - served) / node.count
        return make_next_token_response(entries, truncated)

    def generate(self, model: str, prompt: list[int], max_new: int, stop: list[int]) -> dict:
        self._check_model(model)
        stop_set = set(stop)
        node = self._walk(prompt)
        out: list[int] = []
        while node is not None and len(out) < max_new:
            if not node.children:
                break
            best = min(node.children.values(), key=lambda n: (-n.count, n.token))
            if best.token in stop_set:
                break
            out.append(best.token)
            node = best
        return {"tokens": out}

    def tokenize(self, model: str, text: str) -> dict:
        self._check_model(model)
        if self.tokenizer is None:
            raise ProbeError("oracle backend has no tokenizer configured")
        return {"tokens": self.tokenizer.encode(text)}

    def detokenize(self, model: str, tokens: list[int]) -> dict:
        self._check_model(model)
        if self.tokenizer is None:
            raise ProbeError("oracle backend has no tokenizer configured")
        return {"text": self.tokenizer.decode(tokens)}

    def info(self, model: Optional[str]) -> dict:
        if model is not None:
            self._check_model(model)
        vocab_size = self.tokenizer.vocab_size if self.tokenizer else 0
        return {
            "model": self.model_id,
            "vocab_size": vocab_size,
            "context_window": self.context_window,
            "tokenizer_hash": self.tree.tokenizer_hash,
        }


class CountingBackend:
    """Wraps a backend; records call counts and the in-flight high-water mark."""

    def __init__(self, inner, latency: float = 0.0) -> None:
        self.inner = inner
        self.latency = latency
        self.dist_calls = 0
        self.generate_calls = 0
        self.max_in_flight = 0
        self._in_flight = 0
        self._lock = threading.Lock()

    def _enter(self) -> None:
        with self._lock:
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)

    def _exit(self) -> None:
        with self._lock:
            self._in_flight -= 1

    def next_token_distribution(self, model, context, top_m):
        self._enter()
        try:
            if self.latency:
                import time

                time.sleep(self.latency)
            with self._lock:
                self.dist_calls += 1
            return self.inner.next_token_distribution(model, context, top_m)
        finally:
            self._exit()

    def generate(self, model, prompt, max_new, stop):
        with self._lock:
            self.generate_calls += 1
        return self.inner.generate(model, prompt, max_new, stop)

    def tokenize(self, model, text):
        return self.inner.tokenize(model, text)

    def detokenize(self, model, tokens):
        return self.inner.detokenize(model, tokens)

    def info(self, model):
        return self.inner.info(model)
