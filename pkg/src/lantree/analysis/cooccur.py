"""Windowed co-occurrence counts of term pairs over chunked corpora.

A window is a fixed-length slice of a chunk's tokens (stride 1); a term
occurs in a window when its whole token sequence fits inside it. Windows
never cross chunk boundaries. Chunks shorter than the window contribute a
single window covering the whole chunk.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from lantree.corpus.chunking import Chunk
from lantree.corpus.tokenizers import Tokenizer, WhitespaceTokenizer
from lantree.errors import TokenizerError


@dataclass
class CooccurTable:
    window: int
    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    marginals: dict[str, int] = field(default_factory=dict)

    def count(self, term_a: str, term_b: str) -> int:
        return self.counts.get(_pair_key(term_a, term_b), 0)

    def to_json_dict(self) -> dict:
        return {
            "window": self.window,
            "counts": [
                {"a": a, "b": b, "count": c}
                for (a, b), c in sorted(self.counts.items())
            ],
            "marginals": dict(sorted(self.marginals.items())),
        }


def _pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _occurrence_starts(tokens: Sequence[int], term: Sequence[int]) -> list[int]:
    hits = []
    tlen = len(term)
    for i in range(len(tokens) - tlen + 1):
        if list(tokens[i : i + tlen]) == list(term):
            hits.append(i)
    return hits


def _occurrences_inside(starts: list[int], tlen: int, lo: int, hi: int) -> int:
    """Occurrences fully contained in the window [lo, hi)."""
    first = bisect_left(starts, lo)
    last = bisect_left(starts, hi - tlen + 1)
    return max(0, last - first)


def cooccur(
    chunks: Iterable[Chunk], terms: Mapping[str, Sequence[int]], window: int
) -> CooccurTable:
    """Count, for every unordered term pair, the windows containing both.

    The self pair (t, t) counts windows holding at least two occurrences of
    the term (overlapping occurrences included).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    labels = sorted(terms)
    for label in labels:
        if len(terms[label]) < 1:
            raise ValueError(f"term {label!r} tokenizes to nothing")
    table = CooccurTable(window=window)
    for label in labels:
        table.marginals[label] = 0
    for i, a in enumerate(labels):
        for b in labels[i:]:
            table.counts[_pair_key(a, b)] = 0

    for chunk in chunks:
        tokens = chunk.tokens
        n = len(tokens)
        if n == 0:
            continue
        starts = {label: _occurrence_starts(tokens, terms[label]) for label in labels}
        window_starts = range(n - window + 1) if n >= window else range(1)
        width = window if n >= window else n
        for lo in window_starts:
            hi = lo + width
            inside = {
                label: _occurrences_inside(starts[label], len(terms[label]), lo, hi)
                for label in labels
            }
            for label, k in inside.items():
                if k >= 1:
                    table.marginals[label] += 1
            for i, a in enumerate(labels):
                if inside[a] == 0:
                    continue
                for b in labels[i:]:
                    if a == b:
                        if inside[a] >= 2:
                            table.counts[(a, a)] += 1
                    elif inside[b] >= 1:
                        table.counts[_pair_key(a, b)] += 1
    return table


def cooccur_text(
    chunks: Iterable[Chunk],
    term_strings: Sequence[str],
    tokenizer: Tokenizer,
    window: int,
) -> CooccurTable:
    """Tokenize term strings and count; unknown terms are an error by name."""
    terms: dict[str, list[int]] = {}
    for term in term_strings:
        ids = tokenizer.encode(term)
        if not ids:
            raise TokenizerError(f"term {term!r} tokenizes to nothing")
        if isinstance(tokenizer, WhitespaceTokenizer) and tokenizer.unk_id in ids:
            if all(w != "<unk>" for w in term.split()):
                raise TokenizerError(f"term {term!r} is not in the tokenizer vocabulary")
        terms[term] = ids
    return cooccur(chunks, terms, window)
