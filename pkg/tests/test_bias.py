from __future__ import annotations

import pytest

from lantree.analysis import bias_eval, gen_arithmetic_qa, run_bias_experiment
from lantree.analysis.arithmetic import QaPair
from lantree.corpus.chunking import Chunk
from lantree.corpus.tokenizers import WhitespaceTokenizer
from lantree.data_tree import build_data_tree
from lantree.errors import ProbeError
from lantree.probe import FrequencyOracleBackend, InProcessTransport, ProbeClient


def qa_oracle_client(pairs: list[QaPair]) -> ProbeClient:
    """Frequency oracle memorizing the QA corpus (one document per pair)."""
    texts = [f"{p.question}\n{p.answer}" for p in pairs]
    tok = WhitespaceTokenizer.from_corpus(texts)
    chunks = [Chunk(doc_id=str(i), offset=0, tokens=tok.encode(t)) for i, t in enumerate(texts)]
    tree = build_data_tree(
        chunks, seed=tok.vocab["Calculate"], max_depth=8, tokenizer_hash=tok.spec_hash()
    )
    backend = FrequencyOracleBackend(tree, tokenizer=tok)
    return ProbeClient(InProcessTransport(backend), backend.model_id)


class TestBiasEval:
    def test_oracle_memorizes_original_questions(self):
        pairs = gen_arithmetic_qa(60, rng_seed=11)
        report = bias_eval(qa_oracle_client(pairs), pairs, perturbed=False)
        assert report.acc_original == 1.0
        assert report.acc_perturbed is None
        assert report.n == 60

    def test_perturbation_collapses_oracle_accuracy(self):
        pairs = gen_arithmetic_qa(40, rng_seed=12)
        client = qa_oracle_client(pairs)
        original = bias_eval(client, pairs, perturbed=False)
        perturbed = bias_eval(client, pairs, perturbed=True)
        assert perturbed.acc_perturbed <= original.acc_original
        # The perturbed final token is out-of-vocabulary for the memorized
        # corpus, so the oracle walks off its tree entirely.
        assert perturbed.acc_perturbed == 0.0

    def test_experiment_combines_both_conditions(self):
        pairs = gen_arithmetic_qa(15, rng_seed=13)
        report = run_bias_experiment(qa_oracle_client(pairs), pairs)
        assert report.acc_original == 1.0
        assert report.acc_perturbed == 0.0
        assert report.n == 15
        assert len(report.items) == 30

    def test_empty_pairs_rejected(self):
        pairs = gen_arithmetic_qa(2, rng_seed=1)
        with pytest.raises(ValueError):
            bias_eval(qa_oracle_client(pairs), [], perturbed=False)

    def test_backend_failures_flagged_per_item(self):
        pairs = gen_arithmetic_qa(4, rng_seed=14)
        inner = qa_oracle_client(pairs)

        class FailingGenerate:
            def __init__(self, backend):
                self.backend = backend

            def post(self, path, body):
                if path == "/v1/generate":
                    raise ProbeError("backend down")
                return self.backend.post(path, body)

            def get(self, path, params=None):
                return self.backend.get(path, params)

        client = ProbeClient(FailingGenerate(inner.transport), inner.model_id)
        report = bias_eval(client, pairs, perturbed=False)
        assert report.acc_original == 0.0
        assert all(item["error"] == "backend down" for item in report.items)

    def test_custom_replacement_threaded_through(self):
        pairs = gen_arithmetic_qa(5, rng_seed=15)
        client = qa_oracle_client(pairs)
        report = bias_eval(client, pairs, perturbed=True, replacement="!")
        assert report.acc_perturbed == 0.0
        assert report.items[0]["question"].endswith("!")

    def test_reproducible_bit_for_bit(self):
        pairs = gen_arithmetic_qa(10, rng_seed=16)
        client = qa_oracle_client(pairs)
        a = run_bias_experiment(client, pairs)
        b = run_bias_experiment(client, pairs)
        assert a.to_json_dict() == b.to_json_dict()
