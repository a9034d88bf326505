from __future__ import annotations

import random

import pytest

from lantree.analysis.cooccur import cooccur, cooccur_text
from lantree.corpus.chunking import Chunk
from lantree.corpus.tokenizers import WhitespaceTokenizer
from lantree.errors import TokenizerError
from oracles import naive_cooccur_count


def _chunk(tokens: list[int], doc_id: str = "d") -> Chunk:
    return Chunk(doc_id=doc_id, offset=0, tokens=tokens)


class TestCooccur:
    def test_hand_enumerated_windows(self):
        # "x y x" with window 2: windows (x y) and (y x) both hold x and y.
        table = cooccur([_chunk([0, 1, 0])], {"x": [0], "y": [1]}, window=2)
        assert table.count("x", "y") == 2
        assert table.marginals == {"x": 2, "y": 2}

    def test_disjoint_terms_never_cooccur(self):
        table = cooccur([_chunk([0, 0, 0]), _chunk([1, 1])], {"x": [0], "y": [1]}, window=3)
        assert table.count("x", "y") == 0

    def test_self_pair_counts_double_occurrences(self):
        tokens = [0, 2, 0, 0, 2]
        table = cooccur([_chunk(tokens)], {"a": [0]}, window=3)
        assert table.count("a", "a") == naive_cooccur_count(tokens, [0], [0], 3)

    def test_windows_never_cross_chunks(self):
        table = cooccur([_chunk([0]), _chunk([1])], {"x": [0], "y": [1]}, window=4)
        assert table.count("x", "y") == 0

    def test_short_chunk_single_window(self):
        table = cooccur([_chunk([0, 1])], {"x": [0], "y": [1]}, window=10)
        assert table.count("x", "y") == 1

    def test_multi_token_terms(self):
        # term "0 1" and term "2": windows of 4 over [0,1,2,0,1].
        tokens = [0, 1, 2, 0, 1]
        table = cooccur([_chunk(tokens)], {"p": [0, 1], "q": [2]}, window=4)
        assert table.count("p", "q") == naive_cooccur_count(tokens, [0, 1], [2], 4)

    def test_symmetry_of_lookup(self):
        table = cooccur([_chunk([0, 1, 0])], {"x": [0], "y": [1]}, window=2)
        assert table.count("x", "y") == table.count("y", "x")

    def test_matches_naive_scan_on_random_corpora(self):
        rng = random.Random(31)
        for _ in range(20):
            chunks = [
                _chunk([rng.randrange(4) for _ in range(rng.randint(0, 25))], doc_id=str(i))
                for i in range(4)
            ]
            window = rng.randint(1, 6)
            terms = {"a": [0], "b": [1], "ab": [0, 1]}
            table = cooccur(chunks, terms, window)
            for x in terms:
                for y in terms:
                    expected = sum(
                        naive_cooccur_count(c.tokens, terms[x], terms[y], window)
                        for c in chunks
                    )
                    assert table.count(x, y) == expected, (x, y, window)

    def test_count_bounded_by_marginals(self):
        rng = random.Random(33)
        chunks = [_chunk([rng.randrange(3) for _ in range(30)])]
        table = cooccur(chunks, {"a": [0], "b": [1]}, window=5)
        bound = min(table.marginals["a"], table.marginals["b"])
        assert table.count("a", "b") <= bound

    def test_validation(self):
        with pytest.raises(ValueError):
            cooccur([_chunk([0])], {"x": [0]}, window=0)
        with pytest.raises(ValueError):
            cooccur([_chunk([0])], {"x": []}, window=2)


class TestCooccurText:
    def test_tokenizes_terms(self):
        tok = WhitespaceTokenizer({"Toronto": 0, "Canada": 1, "of": 2})
        chunks = [_chunk(tok.encode("Toronto of Canada Toronto"))]
        table = cooccur_text(chunks, ["Toronto", "Canada"], tok, window=3)
        assert table.count("Toronto", "Canada") == 2

    def test_unknown_term_named_in_error(self):
        tok = WhitespaceTokenizer({"a": 0})
        with pytest.raises(TokenizerError, match="Zanzibar"):
            cooccur_text([_chunk([0])], ["Zanzibar"], tok, window=2)

    def test_json_document_shape(self):
        table = cooccur([_chunk([0, 1, 0])], {"x": [0], "y": [1]}, window=2)
        doc = table.to_json_dict()
        assert doc["window"] == 2
        assert {"a": "x", "b": "y", "count": 2} in doc["counts"]
        assert doc["marginals"] == {"x": 2, "y": 2}
