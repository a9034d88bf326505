"""Tiny decoder-only autoregressive LM with a plain likelihood objective.

Two size presets; checkpoints are saved at requested step marks (0 saves the
initialization) so the alignment of successive checkpoints against a corpus
tree can be measured. The output head is zero-initialized, which makes the
untrained model's next-token distribution exactly uniform.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

PRESETS = {
    "small": {"d_model": 32, "n_layer": 1, "n_head": 2},
    "large": {"d_model": 128, "n_layer": 2, "n_head": 4},
}


@dataclass
class ToyConfig:
    vocab_size: int
    seq_len: int = 16
    d_model: int = 32
    n_layer: int = 1
    n_head: int = 2

    @classmethod
    def preset(cls, size: str, vocab_size: int, seq_len: int) -> "ToyConfig":
        if size not in PRESETS:
            raise ValueError(f"unknown size preset {size!r}")
        return cls(vocab_size=vocab_size, seq_len=seq_len, **PRESETS[size])


class _Block(nn.Module):
    def __init__(self, config: ToyConfig) -> None:
        super().__init__()
        d = config.d_model
        self.ln1 = nn.LayerNorm(d)
        self.attn = nn.MultiheadAttention(d, config.n_head, batch_first=True)
        self.ln2 = nn.LayerNorm(d)
        self.mlp = nn.Sequential(nn.Linear(d, 2 * d), nn.GELU(), nn.Linear(2 * d, d))

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        h = self.ln1(x)
        attn_out, _ = self.attn(h, h, h, attn_mask=mask, need_weights=False)
        x = x + attn_out
        return x + self.mlp(self.ln2(x))


class ToyLM(nn.Module):
    def __init__(self, config: ToyConfig) -> None:
        super().__init__()
        self.config = config
        d = config.d_model
        self.tok_emb = nn.Embedding(config.vocab_size, d)
        self.pos_emb = nn.Embedding(config.seq_len, d)
        self.blocks = nn.ModuleList(_Block(config) for _ in range(config.n_layer))
        self.ln_f = nn.LayerNorm(d)
        self.head = nn.Linear(d, config.vocab_size)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        mask = torch.triu(torch.ones(config.seq_len, config.seq_len, dtype=torch.bool), 1)
        self.register_buffer("causal_mask", mask, persistent=False)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        _batch, length = tokens.shape
        if length > self.config.seq_len:
            raise ValueError(f"sequence length {length} exceeds window {self.config.seq_len}")
        positions = torch.arange(length, device=tokens.device)
        x = self.tok_emb(tokens) + self.pos_emb(positions)[None]
        mask = self.causal_mask[:length, :length]
        for block in self.blocks:
            x = block(x, mask)
        return self.head(self.ln_f(x))

    @torch.no_grad()
    def next_token_logits(self, context: list[int]) -> torch.Tensor:
        self.eval()
        tokens = torch.tensor([context], dtype=torch.long)
        return self.forward(tokens)[0, -1].double()


# ---------------------------------------------------------------------------
# Training


class TrainingDiverged(RuntimeError):
    pass


def save_checkpoint(model: ToyLM, path: str | Path, steps: int, size: str,
                    tokenizer_hash: str) -> None:
    torch.save(
        {
            "config": asdict(model.config),
            "state_dict": model.state_dict(),
            "steps": steps,
            "size": size,
            "tokenizer_hash": tokenizer_hash,
        },
        path,
    )


def load_checkpoint(path: str | Path) -> tuple[ToyLM, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = ToyLM(ToyConfig(**payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    meta = {k: payload[k] for k in ("steps", "size", "tokenizer_hash")}
    return model, meta


def train_toy(
    stream: list[int],
    vocab_size: int,
    steps: int,
    size: str = "small",
    seq_len: int = 16,
    batch_size: int = 32,
    lr: float = 1e-3,
    rng_seed: int = 0,
    tokenizer_hash: str = "",
    save_at: Optional[dict[int, str | Path]] = None,
    log_every: int = 200,
    on_log: Callable[[int, float], None] = lambda step, loss: None,
) -> tuple[ToyLM, list[float]]:
    """Likelihood training over random windows of the token stream.

    ``save_at`` maps step marks to checkpoint paths; mark 0 saves the
    untrained initialization. Returns the model and the per-step losses.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if len(stream) < seq_len + 1:
        raise ValueError(f"stream of {len(stream)} tokens is shorter than seq_len + 1")
    torch.manual_seed(rng_seed)
    generator = torch.Generator().manual_seed(rng_seed)
    model = ToyLM(ToyConfig.preset(size, vocab_size, seq_len))
    save_at = {int(k): v for k, v in (save_at or {}).items()}
    if 0 in save_at:
        save_checkpoint(model, save_at[0], 0, size, tokenizer_hash)

    data = torch.tensor(stream, dtype=torch.long)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    # Cosine decay to zero: the late small steps squeeze out the gradient
    # noise floor that a constant rate leaves behind.
    schedule = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=max(steps, 1))
    losses: list[float] = []
    model.train()
    for step in range(1, steps + 1):
        starts = torch.randint(0, len(stream) - seq_len - 1, (batch_size,), generator=generator)
        batch = torch.stack([data[s : s + seq_len + 1] for s in starts])
        inputs, targets = batch[:, :-1], batch[:, 1:]
        logits = model(inputs)
        loss = F.cross_entropy(logits.reshape(-1, vocab_size), targets.reshape(-1))
        if not math.isfinite(loss.item()):
            raise TrainingDiverged(f"loss became non-finite at step {step}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        schedule.step()
        losses.append(loss.item())
        if step % log_every == 0:
            on_log(step, loss.item())
        if step in save_at:
            save_checkpoint(model, save_at[step], step, size, tokenizer_hash)
    model.eval()
    return model, losses
