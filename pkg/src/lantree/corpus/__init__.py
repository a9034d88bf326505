from lantree.corpus.chunking import Chunk, chunk_corpus, chunk_document
from lantree.corpus.documents import Document, read_documents_jsonl, read_text_dir
from lantree.corpus.tokenizers import (
    ByteBpeTokenizer,
    Tokenizer,
    WhitespaceTokenizer,
    load_tokenizer,
    save_tokenizer,
)

__all__ = [
    "ByteBpeTokenizer",
    "Chunk",
    "Document",
    "Tokenizer",
    "WhitespaceTokenizer",
    "chunk_corpus",
    "chunk_document",
    "load_tokenizer",
    "read_documents_jsonl",
    "read_text_dir",
    "save_tokenizer",
]
