"""Document ingestion: newline-delimited {"id","text"} records, or a
directory of .txt files where the relative path is the document id."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from lantree.errors import IngestionError


@dataclass(frozen=True)
class Document:
    id: str
    text: str


def read_documents_jsonl(path: str | Path) -> list[Document]:
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                doc = Document(id=str(rec["id"]), text=str(rec["text"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise IngestionError(f"{path}:{lineno}: bad record ({e})") from e
            if doc.id in seen:
                raise IngestionError(f"{path}:{lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def read_text_dir(path: str | Path) -> list[Document]:
    root = Path(path)
    if not root.is_dir():
        raise IngestionError(f"not a directory: {root}")
    docs = []
    for p in sorted(root.rglob("*.txt")):
        docs.append(Document(id=str(p.relative_to(root)), text=p.read_text(encoding="utf-8")))
    return docs


def read_corpus(path: str | Path) -> list[Document]:
    p = Path(path)
    return read_text_dir(p) if p.is_dir() else read_documents_jsonl(p)
