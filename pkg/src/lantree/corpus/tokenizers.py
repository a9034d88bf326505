"""Pluggable tokenizers: a whitespace splitter for toy corpora and tests, and
a byte-level BPE driven by external vocab/merges files for real text.

Both expose the same surface: encode, encode_with_spans (character offsets,
needed by the chunker's minimum-length filter), decode, and a stable content
hash so downstream artifacts can refuse cross-tokenizer comparisons.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from lantree.errors import TokenizerError
from lantree.hashing import canonical_digest

TokenSeq = list[int]

_WS_TOKEN = re.compile(r"\S+")
UNK_TOKEN = "<unk>"


def _byte_to_unicode() -> dict[int, str]:
    """Invertible byte -> printable-unicode map (the usual byte-BPE trick:
    printable bytes map to themselves, the rest are shifted past 0x100)."""
    keep = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    mapping = {b: chr(b) for b in keep}
    shift = 0
    for b in range(256):
        if b not in mapping:
            mapping[b] = chr(256 + shift)
            shift += 1
    return mapping


_BYTE_TO_UNI = _byte_to_unicode()
_UNI_TO_BYTE = {c: b for b, c in _BYTE_TO_UNI.items()}


class Tokenizer:
    """Common behavior; concrete classes fill in the span-aware encoder."""

    kind: str

    def __init__(self, vocab: dict[str, int]) -> None:
        ids = sorted(vocab.values())
        if ids != list(range(len(vocab))):
            raise TokenizerError("vocab ids must be dense [0, |vocab|)")
        self.vocab = dict(vocab)
        self.id_to_token = {i: t for t, i in vocab.items()}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def spec_dict(self) -> dict:
        return {"kind": self.kind, "vocab": self.vocab, "merges": self._merge_list()}

    def _merge_list(self) -> list[str]:
        return []

    def spec_hash(self) -> str:
        return canonical_digest(self.spec_dict())

    def encode(self, text: str) -> TokenSeq:
        return self.encode_with_spans(text)[0]

    def encode_with_spans(self, text: str) -> tuple[TokenSeq, list[tuple[int, int]]]:
        raise NotImplementedError

    def decode(self, ids: TokenSeq) -> str:
        raise NotImplementedError

    def _token_for(self, token_id: int) -> str:
        try:
            return self.id_to_token[token_id]
        except KeyError:
            raise TokenizerError(f"unknown token id {token_id}") from None


class WhitespaceTokenizer(Tokenizer):
    """Splits on unicode whitespace; unknown words map to a dedicated UNK id.

    decode(encode(s)) equals s up to whitespace normalization (single spaces).
    """

    kind = "whitespace"

    def __init__(self, vocab: dict[str, int]) -> None:
        if UNK_TOKEN not in vocab:
            vocab = dict(vocab)
            vocab[UNK_TOKEN] = len(vocab)
        super().__init__(vocab)
        self.unk_id = self.vocab[UNK_TOKEN]

    @classmethod
    def from_corpus(cls, texts) -> "WhitespaceTokenizer":
        words = sorted({w for t in texts for w in _WS_TOKEN.findall(t)})
        return cls({w: i for i, w in enumerate(words)})

    def encode_with_spans(self, text: str) -> tuple[TokenSeq, list[tuple[int, int]]]:
        ids: TokenSeq = []
        spans: list[tuple[int, int]] = []
        for m in _WS_TOKEN.finditer(text):
            ids.append(self.vocab.get(m.group(), self.unk_id))
            spans.append((m.start(), m.end()))
        return ids, spans

    def decode(self, ids: TokenSeq) -> str:
        return " ".join(self._token_for(i) for i in ids)


class ByteBpeTokenizer(Tokenizer):
    """Byte-level BPE: text becomes mapped byte symbols, then merge rules are
    applied in file order. Lossless on any unicode string because the vocab
    always covers all 256 single-byte symbols.
    """

    kind = "byte_bpe"

    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]]) -> None:
        super().__init__(vocab)
        missing = [s for s in _UNI_TO_BYTE if s not in vocab]
        if missing:
            raise TokenizerError(
                f"byte_bpe vocab must cover all 256 byte symbols; missing {len(missing)}"
            )
        for a, b in merges:
            if a + b not in vocab:
                raise TokenizerError(f"merge result {a + b!r} not in vocab")
        self.merges = list(merges)

    @classmethod
    def base(cls) -> "ByteBpeTokenizer":
        """Merge-free tokenizer over the 256 byte symbols (ids = byte values)."""
        return cls({_BYTE_TO_UNI[b]: b for b in range(256)}, [])

    def _merge_list(self) -> list[str]:
        return [f"{a} {b}" for a, b in self.merges]

    def _apply_merges(self, parts: list[str], spans: list[tuple[int, int]]):
        for a, b in self.merges:
            i = 0
            out_p: list[str] = []
            out_s: list[tuple[int, int]] = []
            while i < len(parts):
                if i + 1 < len(parts) and parts[i] == a and parts[i + 1] == b:
                    out_p.append(a + b)
                    out_s.append((spans[i][0], spans[i + 1][1]))
                    i += 2
                else:
                    out_p.append(parts[i])
                    out_s.append(spans[i])
                    i += 1
            parts, spans = out_p, out_s
        return parts, spans

    def encode_with_spans(self, text: str) -> tuple[TokenSeq, list[tuple[int, int]]]:
        # Work in byte space, then map byte offsets back to character offsets.
        char_of_byte: list[int] = []
        raw = bytearray()
        for ci, ch in enumerate(text):
            enc = ch.encode("utf-8")
            raw.extend(enc)
            char_of_byte.extend([ci] * len(enc))
        parts = [_BYTE_TO_UNI[b] for b in raw]
        byte_spans = [(i, i + 1) for i in range(len(raw))]
        parts, byte_spans = self._apply_merges(parts, byte_spans)
        ids = [self.vocab[p] for p in parts]
        spans = [(char_of_byte[s], char_of_byte[e - 1] + 1) for s, e in byte_spans]
        return ids, spans

    def decode(self, ids: TokenSeq) -> str:
        symbols = "".join(self._token_for(i) for i in ids)
        data = bytes(_UNI_TO_BYTE[c] for c in symbols)
        return data.decode("utf-8", errors="replace")


def save_tokenizer(tok: Tokenizer, spec_path: str | Path) -> None:
    """Write a spec descriptor plus sibling vocab (and merges) files."""
    spec_path = Path(spec_path)
    vocab_name = spec_path.stem + ".vocab.json"
    desc: dict = {"kind": tok.kind, "vocab": vocab_name}
    with open(spec_path.parent / vocab_name, "w", encoding="utf-8") as f:
        json.dump(tok.vocab, f, ensure_ascii=False, indent=0, sort_keys=True)
    if isinstance(tok, ByteBpeTokenizer):
        merges_name = spec_path.stem + ".merges.txt"
        desc["merges"] = merges_name
        with open(spec_path.parent / merges_name, "w", encoding="utf-8") as f:
            for a, b in tok.merges:
                f.write(f"{a} {b}\n")
    with open(spec_path, "w", encoding="utf-8") as f:
        json.dump(desc, f, indent=2)


def load_tokenizer(spec_path: str | Path) -> Tokenizer:
    """Load a tokenizer from its spec descriptor.

    Descriptor: {"kind": "whitespace"|"byte_bpe", "vocab": <path>, "merges": <path?>}
    with paths relative to the descriptor. Vocab is a token->id JSON map;
    merges is one space-separated symbol pair per line.
    """
    spec_path = Path(spec_path)
    try:
        desc = json.loads(spec_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise TokenizerError(f"cannot read tokenizer spec {spec_path}: {e}") from e
    kind = desc.get("kind")
    try:
        vocab_raw = json.loads((spec_path.parent / desc["vocab"]).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise TokenizerError(f"cannot read vocab for {spec_path}: {e}") from e
    vocab = {str(t): int(i) for t, i in vocab_raw.items()}
    if kind == "whitespace":
        return WhitespaceTokenizer(vocab)
    if kind == "byte_bpe":
        merges: list[tuple[str, str]] = []
        if "merges" in desc:
            text = (spec_path.parent / desc["merges"]).read_text(encoding="utf-8")
            for lineno, line in enumerate(text.splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                pair = line.split(" ")
                if len(pair) != 2:
                    raise TokenizerError(f"bad merge rule at line {lineno}: {line!r}")
                merges.append((pair[0], pair[1]))
        return ByteBpeTokenizer(vocab, merges)
    raise TokenizerError(f"unknown tokenizer kind {kind!r}")
