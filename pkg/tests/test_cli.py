from __future__ import annotations

import json
from pathlib import Path

import pytest

from lantree.cli import main
from lantree.corpus.tokenizers import WhitespaceTokenizer, save_tokenizer
from lantree.tree_io import load_tree
from lantree.viz.html import extract_doc_json
from oracles import brute_conditional


@pytest.fixture()
def workspace(tmp_path, monkeypatch):
    """Tiny corpus + tokenizer spec + isolated probe cache."""
    monkeypatch.setenv("LANTREE_CACHE_DIR", str(tmp_path / "cache"))
    corpus = tmp_path / "corpus.jsonl"
    texts = {
        "doc-a": "If you can see it , you can do it . If not , not .",
        "doc-b": "If you go , we go . The dog barks . The dog sleeps .",
        "doc-c": "The dog sees you . If the dog sees it , it barks .",
    }
    corpus.write_text(
        "\n".join(json.dumps({"id": k, "text": v}) for k, v in texts.items()) + "\n"
    )
    tok = WhitespaceTokenizer.from_corpus(texts.values())
    tok_spec = tmp_path / "tokenizer.json"
    save_tokenizer(tok, tok_spec)
    out = tmp_path / "out"
    return {
        "tmp": tmp_path,
        "corpus": corpus,
        "tokenizer": tok,
        "tok_spec": tok_spec,
        "out": out,
        "texts": texts,
    }


def _base_args(ws, command: str) -> list[str]:
    return [
        command,
        "--corpus", str(ws["corpus"]),
        "--tokenizer", str(ws["tok_spec"]),
        "--seed-tokens", "If,The",
        "--chunk-len", "64",
        "--min-chars", "0",
        "--out", str(ws["out"]),
    ]


class TestBuildDataTree:
    def test_trees_match_brute_force(self, workspace):
        assert main(_base_args(workspace, "build-data-tree")) == 0
        tok = workspace["tokenizer"]
        tree = load_tree(workspace["out"] / "data_If.dtree")
        from lantree.corpus import chunk_corpus
        from lantree.corpus.documents import read_corpus

        chunks = chunk_corpus(read_corpus(workspace["corpus"]), tok, 64, 0)
        seed = tok.vocab["If"]
        you = tok.vocab["you"]
        want = brute_conditional(chunks, [seed], you, "any_occurrence")
        got = tree.root.children[you].count / tree.root.count
        assert got == want.numerator / want.denominator

    def test_manifest_idempotent(self, workspace):
        assert main(_base_args(workspace, "build-data-tree")) == 0
        manifest = (workspace["out"] / "manifest_build.json").read_bytes()
        assert main(_base_args(workspace, "build-data-tree")) == 0
        assert (workspace["out"] / "manifest_build.json").read_bytes() == manifest

    def test_empty_seed_list_is_usage_error(self, workspace):
        args = _base_args(workspace, "build-data-tree")
        i = args.index("--seed-tokens")
        args[i + 1] = ""
        assert main(args) == 1

    def test_missing_corpus_is_error(self, workspace):
        args = _base_args(workspace, "build-data-tree")
        i = args.index("--corpus")
        args[i + 1] = str(workspace["tmp"] / "nope.jsonl")
        assert main(args) == 1

    def test_unknown_seed_word_is_error(self, workspace):
        args = _base_args(workspace, "build-data-tree")
        i = args.index("--seed-tokens")
        args[i + 1] = "Zanzibar"
        assert main(args) == 1


class TestFlattenAndCompare:
    def _build_and_flatten(self, ws) -> None:
        assert main(_base_args(ws, "build-data-tree")) == 0
        args = _base_args(ws, "flatten-gpt") + [
            "--backend", f"oracle://{ws['out']}",
            "--depth", "3",
            "--branch", "4",
        ]
        assert main(args) == 0

    def test_oracle_backend_offline_run(self, workspace):
        self._build_and_flatten(workspace)
        tree = load_tree(workspace["out"] / "gpt_If.gtree")
        assert tree.shape.depth_T == 3
        assert tree.shape.node_count >= 2

    def test_compare_oracle_vs_self(self, workspace):
        self._build_and_flatten(workspace)
        assert main(_base_args(workspace, "compare")) == 0
        report = json.loads((workspace["out"] / "compare_report.json").read_text())
        assert report["mse"] == 0.0
        assert report["recall_at_5"] == 1.0
        assert report["nodes_uncovered"] == 0
        assert {row["seed"] for row in report["seeds"]} == {"If", "The"}

    def test_per_seed_rows_consistent_with_average(self, workspace):
        self._build_and_flatten(workspace)
        assert main(_base_args(workspace, "compare")) == 0
        report = json.loads((workspace["out"] / "compare_report.json").read_text())
        rows = report["seeds"]
        assert report["mse"] == pytest.approx(
            sum(r["mse"] for r in rows) / len(rows)
        )
        assert report["nodes_compared"] == sum(r["nodes_compared"] for r in rows)
        assert report["shape"]["T"] == 3

    def test_tokenizer_hash_mismatch_refused(self, workspace):
        self._build_and_flatten(workspace)
        other = WhitespaceTokenizer({"If": 0, "The": 1})
        other_spec = workspace["tmp"] / "other_tok.json"
        save_tokenizer(other, other_spec)
        args = _base_args(workspace, "flatten-gpt") + ["--backend", f"oracle://{workspace['out']}"]
        i = args.index("--tokenizer")
        args[i + 1] = str(other_spec)
        assert main(args) == 2

    def test_flatten_requires_backend(self, workspace):
        assert main(_base_args(workspace, "flatten-gpt")) == 1


class TestExportSankey:
    def test_json_and_html_artifacts(self, workspace):
        assert main(_base_args(workspace, "build-data-tree")) == 0
        tree_file = workspace["out"] / "data_If.dtree"
        args = _base_args(workspace, "export-sankey") + ["--tree", str(tree_file)]
        assert main(args) == 0
        doc = json.loads((workspace["out"] / "sankey_data_If.json").read_text())
        assert set(doc) == {"nodes", "links"}
        assert doc["nodes"][0]["label"] == "If"
        html = (workspace["out"] / "sankey_data_If.html").read_text()
        assert extract_doc_json(html) == doc


class TestBiasEvalCommand:
    def test_oracle_bias_run(self, workspace, tmp_path):
        # Build the QA corpus and its data tree, then grade through oracle://.
        from lantree.analysis import gen_arithmetic_qa, write_qa_jsonl

        pairs = gen_arithmetic_qa(12, rng_seed=3)
        texts = [f"{p.question}\n{p.answer}" for p in pairs]
        qa_corpus = tmp_path / "qa_corpus.jsonl"
        qa_corpus.write_text(
            "\n".join(json.dumps({"id": str(i), "text": t}) for i, t in enumerate(texts)) + "\n"
        )
        tok = WhitespaceTokenizer.from_corpus(texts)
        tok_spec = tmp_path / "qa_tok.json"
        save_tokenizer(tok, tok_spec)
        out = tmp_path / "qa_out"
        build = [
            "build-data-tree",
            "--corpus", str(qa_corpus),
            "--tokenizer", str(tok_spec),
            "--seed-tokens", "Calculate",
            "--chunk-len", "64",
            "--min-chars", "0",
            "--tree-max-depth", "8",
            "--out", str(out),
        ]
        assert main(build) == 0
        pairs_file = tmp_path / "pairs.jsonl"
        write_qa_jsonl(pairs, pairs_file)
        run = [
            "bias-eval",
            "--tokenizer", str(tok_spec),
            "--seed-tokens", "Calculate",
            "--backend", f"oracle://{out}",
            "--pairs", str(pairs_file),
            "--out", str(out),
        ]
        assert main(run) == 0
        report = json.loads((out / "bias_report.json").read_text())
        assert report["acc_original"] == 1.0
        assert report["acc_perturbed"] == 0.0


class TestCooccurCommand:
    def test_table_artifact(self, workspace):
        args = _base_args(workspace, "cooccur") + ["--terms", "dog,barks", "--window", "4"]
        assert main(args) == 0
        table = json.loads((workspace["out"] / "cooccur.json").read_text())
        counts = {(row["a"], row["b"]): row["count"] for row in table["counts"]}
        assert counts[("barks", "dog")] > 0

    def test_unknown_term_fails(self, workspace):
        args = _base_args(workspace, "cooccur") + ["--terms", "Zanzibar", "--window", "4"]
        assert main(args) == 1


class TestVerifyMleCommand:
    def test_pass_and_report(self, workspace):
        args = [
            "verify-mle",
            "--tables", "5",
            "--tol", "1e-4",
            "--out", str(workspace["out"]),
            "--rng-seed", "7",
        ]
        assert main(args) == 0
        report = json.loads((workspace["out"] / "mle_report.json").read_text())
        assert report["passed"] is True
        assert report["worst_deviation"] < 1e-4

    def test_impossible_tolerance_fails(self, workspace):
        args = [
            "verify-mle",
            "--tables", "2",
            "--tol", "0",
            "--out", str(workspace["out"]),
        ]
        assert main(args) == 1


class TestConfigFile:
    def test_config_file_with_flag_overrides(self, workspace, tmp_path):
        config = {
            "corpus": str(workspace["corpus"]),
            "tokenizer": str(workspace["tok_spec"]),
            "seed_tokens": ["If"],
            "chunk_len": 64,
            "min_chars": 0,
            "out_dir": str(workspace["out"]),
        }
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps(config))
        assert main(["build-data-tree", "--config", str(config_path)]) == 0
        assert (workspace["out"] / "data_If.dtree").exists()
        assert not (workspace["out"] / "data_The.dtree").exists()
        # Flag override wins over the file.
        assert main(["build-data-tree", "--config", str(config_path),
                     "--seed-tokens", "The"]) == 0
        assert (workspace["out"] / "data_The.dtree").exists()

    def test_unknown_config_key_rejected(self, workspace, tmp_path):
        config_path = tmp_path / "bad.json"
        config_path.write_text(json.dumps({"corpsu": "x"}))
        assert main(["build-data-tree", "--config", str(config_path)]) == 1
