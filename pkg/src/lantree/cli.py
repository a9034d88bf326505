"""Command-line driver wiring ingestion, tree building, probing, comparison,
analysis, and export. Every subcommand is a batch job that writes its JSON
artifacts plus a run manifest into the output directory."""

from __future__ import annotations

import argparse
import json
import random
import re
import sys
from pathlib import Path

from lantree import metrics, tree_io
from lantree.analysis import (
    cooccur_text,
    gen_arithmetic_qa,
    read_qa_jsonl,
    run_bias_experiment,
    write_qa_jsonl,
)
from lantree.config import RunConfig, RunManifest
from lantree.corpus import chunk_corpus, load_tokenizer
from lantree.corpus.documents import read_corpus
from lantree.corpus.tokenizers import Tokenizer, WhitespaceTokenizer
from lantree.data_tree import build_data_tree_parallel
from lantree.errors import LantreeError
from lantree.gpt_tree import flatten_model
from lantree.metrics import MleProblem, mle_verify
from lantree.probe import FrequencyOracleBackend, HttpTransport, InProcessTransport, ProbeCache, ProbeClient
from lantree.viz import render_html, tree_to_sankey

ORACLE_SCHEME = "oracle://"


def _log(message: str) -> None:
    print(message, flush=True)


def _slug(word: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]", "_", word)


def _resolve_seed(tokenizer: Tokenizer, word: str) -> int:
    ids = tokenizer.encode(word)
    if not ids:
        raise LantreeError(f"seed word {word!r} tokenizes to nothing")
    if isinstance(tokenizer, WhitespaceTokenizer) and ids[0] == tokenizer.unk_id and word != "<unk>":
        raise LantreeError(f"seed word {word!r} is not in the tokenizer vocabulary")
    return ids[0]


def _make_client(config: RunConfig, seed_word: str, out: Path) -> ProbeClient:
    """HTTP backend, or `oracle://<dir>` serving data trees from <dir>."""
    cache = ProbeCache()
    if config.backend.startswith(ORACLE_SCHEME):
        tree_dir = Path(config.backend[len(ORACLE_SCHEME):] or out)
        tree_path = tree_dir / f"data_{_slug(seed_word)}.dtree"
        if not tree_path.exists():
            raise LantreeError(f"oracle backend needs {tree_path} (run build-data-tree first)")
        tree = tree_io.load_tree(tree_path)
        tokenizer = load_tokenizer(config.tokenizer) if config.tokenizer else None
        backend = FrequencyOracleBackend(tree, tokenizer=tokenizer)
        return ProbeClient(InProcessTransport(backend, endpoint=config.backend), backend.model_id, cache=cache)
    transport = HttpTransport(config.backend)
    return ProbeClient(transport, config.model, cache=cache)


def _load_corpus_chunks(config: RunConfig, manifest: RunManifest):
    tokenizer = load_tokenizer(config.tokenizer)
    docs = read_corpus(config.corpus)
    chunks = chunk_corpus(docs, tokenizer, config.chunk_len, config.min_chars,
                          workers=config.workers, pack=config.pack)
    if Path(config.corpus).is_file():
        manifest.add_input(config.corpus)
    manifest.add_input(config.tokenizer)
    return tokenizer, chunks


# ---------------------------------------------------------------------------
# Subcommands


def cmd_build_data_tree(config: RunConfig) -> int:
    config.validate(require_corpus=True)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    tokenizer, chunks = _load_corpus_chunks(config, manifest)
    _log(f"build-data-tree: {len(chunks)} chunks, {len(config.seed_tokens)} seeds")
    for word in config.seed_tokens:
        seed = _resolve_seed(tokenizer, word)
        tree = build_data_tree_parallel(
            chunks,
            seed,
            max_depth=config.tree_max_depth,
            mode=config.mode,
            tokenizer_hash=tokenizer.spec_hash(),
            workers=config.workers,
        )
        path = out / f"data_{_slug(word)}.dtree"
        tree_io.save_tree(tree, path)
        manifest.add_output(path)
        _log(f"  seed {word!r}: f(seed)={tree.root.count} nodes={tree.node_count()} -> {path}")
        if tree.is_empty:
            _log(f"  seed {word!r}: absent from corpus (empty tree written)")
    manifest.write(out / "manifest_build.json")
    return 0


def cmd_flatten_gpt(config: RunConfig) -> int:
    config.validate(require_backend=True)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    tokenizer = load_tokenizer(config.tokenizer) if config.tokenizer else None
    for word in config.seed_tokens:
        client = _make_client(config, word, out)
        info = client.info()
        if tokenizer is not None and info.get("tokenizer_hash") != tokenizer.spec_hash():
            _log(f"flatten-gpt: refusing {word!r}: backend tokenizer hash "
                 f"{info.get('tokenizer_hash')!r} != {tokenizer.spec_hash()!r}")
            return 2
        seed = _resolve_seed(tokenizer, word) if tokenizer else int(word)
        checkpoint = out / f"gpt_{_slug(word)}.partial.gtree"
        tree = flatten_model(client, seed, config.depth_T, config.branch_K, checkpoint_path=str(checkpoint))
        path = out / f"gpt_{_slug(word)}.gtree"
        tree_io.save_tree(tree, path)
        manifest.add_output(path)
        _log(f"  seed {word!r}: shape T={config.depth_T} K={config.branch_K} "
             f"nodes={tree.shape.node_count} -> {path}")
    manifest.write(out / "manifest_flatten.json")
    return 0


def cmd_compare(config: RunConfig) -> int:
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    rows = []
    shape = None
    for word in config.seed_tokens:
        data_path = out / f"data_{_slug(word)}.dtree"
        gpt_path = out / f"gpt_{_slug(word)}.gtree"
        if not data_path.exists() or not gpt_path.exists():
            raise LantreeError(f"missing tree files for seed {word!r} in {out}")
        data = tree_io.load_tree(data_path)
        gpt = tree_io.load_tree(gpt_path)
        mse_report = metrics.tree_mse(gpt, data)
        recall_report = metrics.tree_recall_at_k(gpt, data, k=5)
        shape = gpt.shape
        rows.append(
            {
                "seed": word,
                "mse": mse_report.mse,
                "recall_at_5": recall_report.recall_at_5,
                "nodes_compared": mse_report.nodes_compared,
                "nodes_uncovered": mse_report.nodes_uncovered,
            }
        )
        _log(f"  seed {word!r}: mse={mse_report.mse} recall@5={recall_report.recall_at_5} "
             f"covered={mse_report.nodes_compared} uncovered={mse_report.nodes_uncovered}")
    mses = [r["mse"] for r in rows if r["mse"] is not None]
    recalls = [r["recall_at_5"] for r in rows if r["recall_at_5"] is not None]
    report = {
        "mse": sum(mses) / len(mses) if mses else None,
        "recall_at_5": sum(recalls) / len(recalls) if recalls else None,
        "nodes_compared": sum(r["nodes_compared"] for r in rows),
        "nodes_uncovered": sum(r["nodes_uncovered"] for r in rows),
        "shape": shape.as_dict() if shape else None,
        "config_digest": config.digest(),
        "seeds": rows,
    }
    path = out / "compare_report.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    manifest.add_output(path)
    manifest.write(out / "manifest_compare.json")
    _log(f"compare: average mse={report['mse']} recall@5={report['recall_at_5']}")
    return 0


def cmd_export_sankey(config: RunConfig, tree_path: str, max_depth: int, max_children: int,
                      prob_floor: float) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    tokenizer = load_tokenizer(config.tokenizer)
    tree = tree_io.load_tree(tree_path)
    doc = tree_to_sankey(tree, tokenizer, max_depth=max_depth, max_children=max_children,
                         prob_floor=prob_floor)
    stem = Path(tree_path).stem
    json_path = out / f"sankey_{stem}.json"
    html_path = out / f"sankey_{stem}.html"
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(doc.to_json_dict(), f, indent=2, ensure_ascii=False)
        f.write("\n")
    html_path.write_text(render_html(doc, title=stem), encoding="utf-8")
    manifest.add_input(tree_path)
    manifest.add_output(json_path)
    manifest.add_output(html_path)
    manifest.write(out / f"manifest_sankey_{stem}.json")
    _log(f"export-sankey: {len(doc.nodes)} nodes, {len(doc.links)} links -> {json_path}")
    return 0


def cmd_bias_eval(config: RunConfig, n: int, pairs_path: str | None, ops: str) -> int:
    config.validate(require_backend=True)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    if pairs_path:
        pairs = read_qa_jsonl(pairs_path)
        manifest.add_input(pairs_path)
    else:
        pairs = gen_arithmetic_qa(n, rng_seed=config.rng_seed, ops=tuple(ops.split(",")))
        qa_path = out / "qa_pairs.jsonl"
        write_qa_jsonl(pairs, qa_path)
        manifest.add_output(qa_path)
    client = _make_client(config, config.seed_tokens[0], out)
    report = run_bias_experiment(client, pairs)
    path = out / "bias_report.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_json_dict(), f, indent=2, ensure_ascii=False)
        f.write("\n")
    manifest.add_output(path)
    manifest.write(out / "manifest_bias.json")
    _log(f"bias-eval: n={report.n} acc_original={report.acc_original} "
         f"acc_perturbed={report.acc_perturbed}")
    return 0


def cmd_cooccur(config: RunConfig, terms: str, window: int) -> int:
    config.validate(require_corpus=True)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest())
    tokenizer, chunks = _load_corpus_chunks(config, manifest)
    term_list = [t for t in terms.split(",") if t]
    table = cooccur_text(chunks, term_list, tokenizer, window)
    path = out / "cooccur.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(table.to_json_dict(), f, indent=2, ensure_ascii=False)
        f.write("\n")
    manifest.add_output(path)
    manifest.write(out / "manifest_cooccur.json")
    _log(f"cooccur: window={window} pairs={len(table.counts)} -> {path}")
    return 0


def cmd_verify_mle(config: RunConfig, tables: int, tol: float) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(config.rng_seed)
    worst = 0.0
    worst_ctx = ""
    for t in range(tables):
        contexts = []
        for c in range(rng.randint(1, 10)):
            outcomes = rng.randint(2, 8)
            counts = {w: rng.randint(1, 100) for w in range(outcomes)}
            contexts.append((f"table{t}/ctx{c}", counts))
        report = mle_verify(MleProblem(contexts=contexts), tol=tol)
        if report.worst_deviation > worst:
            worst = report.worst_deviation
            worst_ctx = report.worst_context
    passed = worst < tol
    path = out / "mle_report.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"tables": tables, "tol": tol, "worst_deviation": worst,
                   "worst_context": worst_ctx, "passed": passed}, f, indent=2)
        f.write("\n")
    _log(f"verify-mle: tables={tables} worst deviation={worst:.3e} "
         f"({worst_ctx}) {'PASS' if passed else 'FAIL'} at tol={tol}")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# Argument wiring


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="declarative JSON config file")
    p.add_argument("--corpus", help="corpus jsonl file or directory of .txt")
    p.add_argument("--tokenizer", help="tokenizer spec descriptor path")
    p.add_argument("--seed-tokens", help="comma-separated seed words")
    p.add_argument("--depth", type=int, dest="depth_T", help="probe tree depth T")
    p.add_argument("--branch", type=int, dest="branch_K", help="probe tree branching K")
    p.add_argument("--chunk-len", type=int, help="tokens per training chunk")
    p.add_argument("--min-chars", type=int, help="minimum character span of the final slice")
    p.add_argument("--pack", action="store_const", const=True, default=None,
                   help="pack documents into one stream before slicing")
    p.add_argument("--tree-max-depth", type=int, help="data tree depth cap")
    p.add_argument("--mode", choices=["any_occurrence", "chunk_initial"])
    p.add_argument("--backend", help="backend URL (http://... or oracle://<tree dir>)")
    p.add_argument("--model", help="backend model id")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--rng-seed", type=int, dest="rng_seed")
    p.add_argument("--workers", type=int)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "corpus": args.corpus,
        "tokenizer": args.tokenizer,
        "seed_tokens": args.seed_tokens.split(",") if args.seed_tokens else None,
        "depth_T": args.depth_T,
        "branch_K": args.branch_K,
        "chunk_len": args.chunk_len,
        "min_chars": args.min_chars,
        "pack": args.pack,
        "tree_max_depth": args.tree_max_depth,
        "mode": args.mode,
        "backend": args.backend,
        "model": args.model,
        "out_dir": args.out_dir,
        "rng_seed": args.rng_seed,
        "workers": args.workers,
    }
    return RunConfig.load(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lantree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("build-data-tree", "flatten-gpt", "compare"):
        p = sub.add_parser(name)
        _add_common(p)

    p = sub.add_parser("export-sankey")
    _add_common(p)
    p.add_argument("--tree", required=True, help="tree file to export")
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--max-children", type=int, default=5)
    p.add_argument("--prob-floor", type=float, default=0.01)

    p = sub.add_parser("bias-eval")
    _add_common(p)
    p.add_argument("--n", type=int, default=100, help="generated QA pairs when --pairs absent")
    p.add_argument("--pairs", help="existing QA jsonl file")
    p.add_argument("--ops", default="+,-,*,/")

    p = sub.add_parser("cooccur")
    _add_common(p)
    p.add_argument("--terms", required=True, help="comma-separated term strings")
    p.add_argument("--window", type=int, default=64)

    p = sub.add_parser("verify-mle")
    _add_common(p)
    p.add_argument("--tables", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "build-data-tree":
            return cmd_build_data_tree(config)
        if args.command == "flatten-gpt":
            return cmd_flatten_gpt(config)
        if args.command == "compare":
            return cmd_compare(config)
        if args.command == "export-sankey":
            return cmd_export_sankey(config, args.tree, args.max_depth, args.max_children,
                                     args.prob_floor)
        if args.command == "bias-eval":
            return cmd_bias_eval(config, args.n, args.pairs, args.ops)
        if args.command == "cooccur":
            return cmd_cooccur(config, args.terms, args.window)
        if args.command == "verify-mle":
            return cmd_verify_mle(config, args.tables, args.tol)
        raise AssertionError(f"unhandled command {args.command}")
    except (LantreeError, ValueError, OSError) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
