"""Run configuration and manifests for the command-line driver.

A single declarative JSON file, overridable flag by flag. Every run writes a
manifest (config digest, input hashes, tool version, output hashes) with no
timestamps, so identical runs produce identical manifests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from lantree import __version__
from lantree.hashing import canonical_digest, file_digest

# One word per starting letter, A through W ("X/Y/Z" have no entry in the
# source list; the seed set is configuration, not a constant of the system).
DEFAULT_SEED_WORDS = (
    "As", "Because", "Could", "Do", "Even", "For", "Given", "However", "If",
    "Just", "Keep", "Let", "Many", "Now", "Once", "Perhaps", "Quite",
    "Rather", "Since", "The", "Under", "Very", "Where",
)


@dataclass
class RunConfig:
    corpus: str = ""
    tokenizer: str = ""
    seed_tokens: tuple[str, ...] = DEFAULT_SEED_WORDS
    chunk_len: int = 2048
    min_chars: int = 200
    pack: bool = False
    tree_max_depth: int = 10
    mode: str = "any_occurrence"
    depth_T: int = 5
    branch_K: int = 5
    backend: str = ""
    model: str = ""
    out_dir: str = "out"
    rng_seed: int = 0
    workers: int = 1

    def validate(self, require_corpus: bool = False, require_backend: bool = False) -> None:
        for name, value in (("chunk_len", self.chunk_len), ("depth_T", self.depth_T),
                            ("branch_K", self.branch_K), ("tree_max_depth", self.tree_max_depth)):
            if value < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.min_chars < 0:
            raise ValueError("min_chars must be >= 0")
        if not self.seed_tokens:
            raise ValueError("seed token list is empty")
        if require_corpus:
            if not self.corpus or not Path(self.corpus).exists():
                raise ValueError(f"corpus path does not exist: {self.corpus!r}")
            if not self.tokenizer or not Path(self.tokenizer).exists():
                raise ValueError(f"tokenizer spec path does not exist: {self.tokenizer!r}")
        if require_backend and not self.backend:
            raise ValueError("backend endpoint is required")

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def digest(self) -> str:
        return canonical_digest(self.as_dict())

    @classmethod
    def load(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        data: dict = {}
        if config_path:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        if "seed_tokens" in data and data["seed_tokens"] is not None:
            data["seed_tokens"] = tuple(data["seed_tokens"])
        return cls(**data)


@dataclass
class RunManifest:
    config_digest: str
    tool_version: str = __version__
    input_hashes: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def add_input(self, path: str | Path) -> None:
        p = Path(path)
        self.input_hashes[p.name] = file_digest(p)

    def add_output(self, path: str | Path) -> None:
        p = Path(path)
        self.outputs[p.name] = file_digest(p)

    def write(self, path: str | Path) -> None:
        payload = {
            "config_digest": self.config_digest,
            "tool_version": self.tool_version,
            "input_hashes": dict(sorted(self.input_hashes.items())),
            "outputs": dict(sorted(self.outputs.items())),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
