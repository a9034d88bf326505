"""Split documents into fixed-size token windows.

A document is tokenized once and sliced into consecutive windows of
``chunk_len`` tokens. The final window is discarded when the source text it
covers is shorter than ``min_chars`` characters; everything before it is kept,
so the surviving chunks are always an exact prefix of the token stream.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from lantree.corpus.documents import Document
from lantree.corpus.tokenizers import TokenSeq, Tokenizer
from lantree.errors import IngestionError

DEFAULT_CHUNK_LEN = 2048
DEFAULT_MIN_CHARS = 200


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    offset: int  # token index of the first token within the document
    tokens: TokenSeq = field(default_factory=list)


def chunk_document(
    doc: Document,
    tokenizer: Tokenizer,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    min_chars: int = DEFAULT_MIN_CHARS,
) -> list[Chunk]:
    if chunk_len < 1:
        raise ValueError("chunk_len must be >= 1")
    if min_chars < 0:
        raise ValueError("min_chars must be >= 0")
    try:
        ids, spans = tokenizer.encode_with_spans(doc.text)
    except Exception as e:
        raise IngestionError(f"tokenization failed for document {doc.id!r}: {e}") from e
    chunks: list[Chunk] = []
    for start in range(0, len(ids), chunk_len):
        end = min(start + chunk_len, len(ids))
        chunks.append(Chunk(doc_id=doc.id, offset=start, tokens=ids[start:end]))
    if chunks:
        last = chunks[-1]
        lo = spans[last.offset][0]
        hi = spans[last.offset + len(last.tokens) - 1][1]
        if hi - lo < min_chars:
            chunks.pop()
    return chunks


def chunk_corpus(
    docs: list[Document],
    tokenizer: Tokenizer,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    min_chars: int = DEFAULT_MIN_CHARS,
    workers: int = 1,
    pack: bool = False,
) -> list[Chunk]:
    """Chunk many documents; deterministic regardless of worker count.

    Documents are independent work items, and results are concatenated in
    sorted-doc-id order so any parallel schedule yields the same chunk list.
    With ``pack=True`` all token streams are concatenated (GPT-3 style) and
    sliced as one sequence; the final-slice filter then measures the summed
    character extent of its tokens, since a packed slice has no single
    contiguous source span.
    """
    ordered = sorted(docs, key=lambda d: d.id)
    if pack:
        return _pack_and_chunk(ordered, tokenizer, chunk_len, min_chars)
    if workers <= 1:
        per_doc = [chunk_document(d, tokenizer, chunk_len, min_chars) for d in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_doc = list(
                pool.map(lambda d: chunk_document(d, tokenizer, chunk_len, min_chars), ordered)
            )
    return [c for chunks in per_doc for c in chunks]


PACKED_DOC_ID = "<packed>"


def _pack_and_chunk(
    ordered: list[Document], tokenizer: Tokenizer, chunk_len: int, min_chars: int
) -> list[Chunk]:
    if chunk_len < 1:
        raise ValueError("chunk_len must be >= 1")
    stream: TokenSeq = []
    widths: list[int] = []
    for doc in ordered:
        try:
            ids, spans = tokenizer.encode_with_spans(doc.text)
        except Exception as e:
            raise IngestionError(f"tokenization failed for document {doc.id!r}: {e}") from e
        stream.extend(ids)
        widths.extend(end - start for start, end in spans)
    chunks: list[Chunk] = []
    for start in range(0, len(stream), chunk_len):
        end = min(start + chunk_len, len(stream))
        chunks.append(Chunk(doc_id=PACKED_DOC_ID, offset=start, tokens=stream[start:end]))
    if chunks:
        last = chunks[-1]
        if sum(widths[last.offset : last.offset + len(last.tokens)]) < min_chars:
            chunks.pop()
    return chunks
