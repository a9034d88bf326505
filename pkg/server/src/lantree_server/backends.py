"""Protocol backends: frequency oracle over a tree file, toy-LM checkpoints,
and local pretrained causal LMs. All three produce the same wire payloads."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from lantree_server.formats import (
    FrequencyTree,
    ServerTokenizer,
    TreeNode,
    load_tokenizer_spec,
    read_data_tree,
)
from lantree_server.toy_lm import load_checkpoint

LOGMASS_ZERO = -1e30


class BackendError(Exception):
    def __init__(self, message: str, status: int = 400) -> None:
        super().__init__(message)
        self.status = status


def dist_payload_from_logits(logits: np.ndarray, top_m: int) -> dict:
    """Exact softmax of raw logits, truncated to top_m with the leftover mass
    carried as truncated_logmass. Ties rank by ascending token id."""
    logits = np.asarray(logits, dtype=np.float64)
    log_z = float(np.logaddexp.reduce(logits))
    logprobs = logits - log_z
    order = np.lexsort((np.arange(len(logits)), -logprobs))
    chosen = order[:top_m]
    rest = order[top_m:]
    entries = [{"token": int(t), "logprob": float(logprobs[t])} for t in chosen]
    if len(rest) == 0:
        truncated = LOGMASS_ZERO
    else:
        truncated = float(np.logaddexp.reduce(logprobs[rest]))
    return {"entries": entries, "truncated_logmass": truncated}


class FrequencyOracle:
    """Serves a data tree's exact conditional frequencies.

    Served probabilities are count ratios against the context count, so the
    truncated mass also absorbs continuations lost to chunk boundaries."""

    def __init__(self, tree_path: str | Path, tokenizer_spec: Optional[str | Path] = None) -> None:
        self.tree: FrequencyTree = read_data_tree(tree_path)
        self.tokenizer: Optional[ServerTokenizer] = (
            load_tokenizer_spec(tokenizer_spec) if tokenizer_spec else None
        )
        self.context_window = 1 << 16

    @property
    def tokenizer_hash(self) -> str:
        return self.tree.tokenizer_hash

    @property
    def vocab_size(self) -> int:
        return self.tokenizer.vocab_size if self.tokenizer else 0

    def _walk(self, context: Sequence[int]) -> Optional[TreeNode]:
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

    def next_token_distribution(self, context: list[int], top_m: int) -> dict:
        node = self._walk(context)
        if node is None or node.count == 0:
            return {"entries": [], "truncated_logmass": 0.0}
        ranked = sorted(node.children.values(), key=lambda n: (-n.count, n.token))
        chosen = ranked[:top_m]
        entries = [
            {"token": c.token, "logprob": math.log(c.count / node.count)} for c in chosen
        ]
        leftover = node.count - sum(c.count for c in chosen)
        truncated = math.log(leftover / node.count) if leftover else LOGMASS_ZERO
        return {"entries": entries, "truncated_logmass": truncated}

    def generate(self, prompt: list[int], max_new: int, stop: Sequence[int]) -> list[int]:
        stop_set = set(stop)
        node = self._walk(prompt)
        out: list[int] = []
        while node is not None and node.children and len(out) < max_new:
            best = min(node.children.values(), key=lambda n: (-n.count, n.token))
            if best.token in stop_set:
                break
            out.append(best.token)
            node = best
        return out

    def tokenize(self, text: str) -> list[int]:
        return self.tokenizer.encode(text)

    def detokenize(self, tokens: list[int]) -> str:
        return self.tokenizer.decode(tokens)


class _TokenizedModel:
    """Shared text plumbing for backends that pair logits with a tokenizer."""

    tokenizer: ServerTokenizer

    def tokenize(self, text: str) -> list[int]:
        return self.tokenizer.encode(text)

    def detokenize(self, tokens: list[int]) -> str:
        return self.tokenizer.decode(tokens)

    @property
    def tokenizer_hash(self) -> str:
        return self.tokenizer.spec_hash()

    @property
    def vocab_size(self) -> int:
        return self.tokenizer.vocab_size

    def _logits(self, context: list[int]) -> np.ndarray:
        raise NotImplementedError

    context_window: int = 0

    def next_token_distribution(self, context: list[int], top_m: int) -> dict:
        if len(context) > self.context_window:
            raise BackendError(
                f"context length {len(context)} exceeds window {self.context_window}", status=422
            )
        return dist_payload_from_logits(self._logits(context), top_m)

    def generate(self, prompt: list[int], max_new: int, stop: Sequence[int]) -> list[int]:
        stop_set = set(stop)
        context = list(prompt)
        out: list[int] = []
        while len(out) < max_new and len(context) < self.context_window:
            logits = self._logits(context)
            token = int(np.lexsort((np.arange(len(logits)), -logits))[0])
            if token in stop_set:
                break
            out.append(token)
            context.append(token)
        return out


class ToyLmBackend(_TokenizedModel):
    def __init__(self, checkpoint_path: str | Path, tokenizer_spec: str | Path) -> None:
        self.model, self.meta = load_checkpoint(checkpoint_path)
        self.tokenizer = load_tokenizer_spec(tokenizer_spec)
        if self.tokenizer.vocab_size > self.model.config.vocab_size:
            raise BackendError(
                "tokenizer vocab larger than the checkpoint's vocab", status=500
            )
        expected = self.meta.get("tokenizer_hash")
        if expected and expected != self.tokenizer.spec_hash():
            raise BackendError("checkpoint was trained with a different tokenizer", status=500)
        self.context_window = self.model.config.seq_len

    def _logits(self, context: list[int]) -> np.ndarray:
        return self.model.next_token_logits(context).numpy()


class HfCausalLmBackend(_TokenizedModel):
    """Local pretrained causal LM (transformers) paired with a core tokenizer
    spec; useful for desk-scale probing of real checkpoints."""

    def __init__(self, model_dir: str | Path, tokenizer_spec: str | Path,
                 context_window: Optional[int] = None) -> None:
        import torch
        from transformers import AutoModelForCausalLM

        self._torch = torch
        self.model = AutoModelForCausalLM.from_pretrained(str(model_dir), local_files_only=True)
        self.model.eval()
        self.tokenizer = load_tokenizer_spec(tokenizer_spec)
        configured = getattr(self.model.config, "n_positions", None) or getattr(
            self.model.config, "max_position_embeddings", 1024
        )
        self.context_window = context_window or int(configured)

    def _logits(self, context: list[int]) -> np.ndarray:
        with self._torch.no_grad():
            ids = self._torch.tensor([context], dtype=self._torch.long)
            out = self.model(input_ids=ids).logits[0, -1]
        return out.double().numpy()
