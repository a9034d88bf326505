"""Independent readers for the core toolkit's on-disk interfaces.

The server deliberately re-implements these instead of importing the core
package: the tokenizer spec files, the tree container, and the canonical
tokenizer hash are documented interchange formats, and a second reader keeps
them honest.

Tokenizer hash: sha256 over the canonical JSON of
    {"kind": ..., "merges": ["a b", ...], "vocab": {token: id}}
serialized with sorted keys, separators (",", ":"), and ASCII escaping.

Tree container (little-endian):
    magic "MCLT" | u16 version (1) | u8 type (0=data, 1=gpt) | u32 seed
    u32 meta length | canonical-JSON meta | u64 node count
    preorder data nodes: u32 token | u64 count | u32 n_children
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path


class FormatError(Exception):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def tokenizer_spec_hash(kind: str, vocab: dict[str, int], merges: list[tuple[str, str]]) -> str:
    payload = {"kind": kind, "vocab": vocab, "merges": [f"{a} {b}" for a, b in merges]}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Tokenizers (whitespace and byte-level BPE, matching the core's behavior)

_WS = re.compile(r"\S+")
UNK_TOKEN = "<unk>"


def _byte_to_unicode() -> dict[int, str]:
    keep = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(0xA1, 0xAC + 1))
        + list(range(0xAE, 0xFF + 1))
    )
    mapping = {b: chr(b) for b in keep}
    shift = 0
    for b in range(256):
        if b not in mapping:
            mapping[b] = chr(256 + shift)
            shift += 1
    return mapping


_B2U = _byte_to_unicode()
_U2B = {c: b for b, c in _B2U.items()}


@dataclass
class ServerTokenizer:
    kind: str
    vocab: dict[str, int]
    merges: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.id_to_token = {i: t for t, i in self.vocab.items()}
        self.unk_id = self.vocab.get(UNK_TOKEN)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def spec_hash(self) -> str:
        return tokenizer_spec_hash(self.kind, self.vocab, self.merges)

    def encode(self, text: str) -> list[int]:
        if self.kind == "whitespace":
            return [self.vocab.get(w, self.unk_id) for w in _WS.findall(text)]
        parts = [_B2U[b] for b in text.encode("utf-8")]
        for a, b in self.merges:
            out = []
            i = 0
            while i < len(parts):
                if i + 1 < len(parts) and parts[i] == a and parts[i + 1] == b:
                    out.append(a + b)
                    i += 2
                else:
                    out.append(parts[i])
                    i += 1
            parts = out
        return [self.vocab[p] for p in parts]

    def decode(self, ids: list[int]) -> str:
        try:
            tokens = [self.id_to_token[i] for i in ids]
        except KeyError as e:
            raise FormatError(f"unknown token id {e.args[0]}") from None
        if self.kind == "whitespace":
            return " ".join(tokens)
        data = bytes(_U2B[c] for c in "".join(tokens))
        return data.decode("utf-8", errors="replace")


def load_tokenizer_spec(spec_path: str | Path) -> ServerTokenizer:
    spec_path = Path(spec_path)
    desc = json.loads(spec_path.read_text(encoding="utf-8"))
    kind = desc.get("kind")
    if kind not in ("whitespace", "byte_bpe"):
        raise FormatError(f"unknown tokenizer kind {kind!r}")
    vocab_raw = json.loads((spec_path.parent / desc["vocab"]).read_text(encoding="utf-8"))
    vocab = {str(t): int(i) for t, i in vocab_raw.items()}
    merges: list[tuple[str, str]] = []
    if kind == "byte_bpe" and "merges" in desc:
        for line in (spec_path.parent / desc["merges"]).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(" ")
            merges.append((a, b))
    if kind == "whitespace" and UNK_TOKEN not in vocab:
        vocab[UNK_TOKEN] = len(vocab)
    return ServerTokenizer(kind=kind, vocab=vocab, merges=merges)


def write_tokenizer_spec(tok: ServerTokenizer, spec_path: str | Path) -> None:
    spec_path = Path(spec_path)
    vocab_name = spec_path.stem + ".vocab.json"
    desc = {"kind": tok.kind, "vocab": vocab_name}
    (spec_path.parent / vocab_name).write_text(
        json.dumps(tok.vocab, ensure_ascii=False, indent=0, sort_keys=True), encoding="utf-8"
    )
    if tok.kind == "byte_bpe" and tok.merges:
        merges_name = spec_path.stem + ".merges.txt"
        desc["merges"] = merges_name
        (spec_path.parent / merges_name).write_text(
            "".join(f"{a} {b}\n" for a, b in tok.merges), encoding="utf-8"
        )
    spec_path.write_text(json.dumps(desc, indent=2), encoding="utf-8")


def byte_tokenizer() -> ServerTokenizer:
    return ServerTokenizer(kind="byte_bpe", vocab={_B2U[b]: b for b in range(256)})


def whitespace_tokenizer_from_texts(texts) -> ServerTokenizer:
    words = sorted({w for t in texts for w in _WS.findall(t)})
    vocab = {w: i for i, w in enumerate(words)}
    if UNK_TOKEN not in vocab:
        vocab[UNK_TOKEN] = len(vocab)
    return ServerTokenizer(kind="whitespace", vocab=vocab)


# ---------------------------------------------------------------------------
# Tree container (read side, data trees only)


@dataclass
class TreeNode:
    token: int
    count: int
    children: dict[int, "TreeNode"] = field(default_factory=dict)


@dataclass
class FrequencyTree:
    seed: int
    root: TreeNode
    meta: dict

    @property
    def tokenizer_hash(self) -> str:
        return str(self.meta.get("tokenizer_hash", ""))


def read_data_tree(path: str | Path) -> FrequencyTree:
    data = Path(path).read_bytes()
    pos = 0

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError("tree file truncated")
        values = struct.unpack_from(fmt, data, pos)
        pos += size
        return values

    if data[:4] != b"MCLT":
        raise FormatError("not a tree container")
    pos = 4
    version, tree_type, seed = take("<HBI")
    if version != 1:
        raise FormatError(f"unsupported container version {version}")
    if tree_type != 0:
        raise FormatError("oracle backends require a data tree (type 0)")
    (meta_len,) = take("<I")
    meta = json.loads(data[pos : pos + meta_len].decode("utf-8"))
    pos += meta_len
    (node_count,) = take("<Q")
    root = None
    stack: list[list] = []
    for _ in range(node_count):
        token, count, n_children = take("<IQI")
        node = TreeNode(token=token, count=count)
        if root is None:
            root = node
        else:
            while stack and stack[-1][1] == 0:
                stack.pop()
            if not stack:
                raise FormatError("inconsistent node stream")
            stack[-1][0].children[token] = node
            stack[-1][1] -= 1
        stack.append([node, n_children])
    if pos != len(data):
        raise FormatError("trailing bytes after node stream")
    return FrequencyTree(seed=seed, root=root, meta=meta)
