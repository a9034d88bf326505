from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lantree.corpus.chunking import Chunk
from lantree.corpus.tokenizers import WhitespaceTokenizer
from lantree.data_tree import build_data_tree

# The worked example used throughout: corpus {"a b a b", "a c"}, seed "a".
EXAMPLE_TEXTS = ("a b a b", "a c")


@pytest.fixture()
def example_tokenizer() -> WhitespaceTokenizer:
    return WhitespaceTokenizer.from_corpus(EXAMPLE_TEXTS)


@pytest.fixture()
def example_chunks(example_tokenizer) -> list[Chunk]:
    return [
        Chunk(doc_id=str(i), offset=0, tokens=example_tokenizer.encode(text))
        for i, text in enumerate(EXAMPLE_TEXTS)
    ]


@pytest.fixture()
def example_tree(example_tokenizer, example_chunks):
    return build_data_tree(
        example_chunks,
        seed=example_tokenizer.vocab["a"],
        max_depth=2,
        tokenizer_hash=example_tokenizer.spec_hash(),
    )


# Acceptance criteria register one line each; print them as a summary block.
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
