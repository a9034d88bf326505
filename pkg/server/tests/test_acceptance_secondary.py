"""Secondary acceptance: convergence and token-bias trends of the toy LM,
measured end to end through the core toolkit's own surfaces — corpus files,
tokenizer specs, the command-line driver, and the live HTTP protocol."""

from __future__ import annotations

import bisect
import json
import os
import random
import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_RESULTS
from lantree_server.backends import ToyLmBackend
from lantree_server.formats import (
    byte_tokenizer,
    whitespace_tokenizer_from_texts,
    write_tokenizer_spec,
)
from lantree_server.toy_lm import train_toy

SUCCESSOR_WEIGHTS = (0.35, 0.22, 0.15, 0.10, 0.07, 0.05, 0.035, 0.025)
VOCAB = 64
CORPUS_TOKENS = 1_000_000
SEED_WORDS = [f"w{i:02d}" for i in range(8)]


def _record(name: str, ok: bool) -> None:
    ACCEPTANCE_RESULTS.append((name, ok))
    assert ok, name


def _run_cli(args: list[str], env_extra: dict | None = None) -> None:
    env = dict(os.environ)
    env.update(env_extra or {})
    proc = subprocess.run(
        [sys.executable, "-m", "lantree.cli", *args],
        capture_output=True,
        text=True,
        env=env,
        timeout=600,
    )
    assert proc.returncode == 0, f"lantree {args[0]} failed:\n{proc.stdout}\n{proc.stderr}"


def _markov_corpus(rng: random.Random) -> list[int]:
    successors = {s: rng.sample(range(VOCAB), len(SUCCESSOR_WEIGHTS)) for s in range(VOCAB)}
    cumulative = []
    acc = 0.0
    for w in SUCCESSOR_WEIGHTS:
        acc += w
        cumulative.append(acc)
    stream = [rng.randrange(VOCAB)]
    for _ in range(CORPUS_TOKENS - 1):
        row = successors[stream[-1]]
        stream.append(row[bisect.bisect_left(cumulative, rng.random())])
    return stream


def _mean_cross_entropy(model, token_stream: list[int], tokens: int = 200_000) -> float:
    """Deterministic likelihood eval over a fixed stream slice (the training
    loss itself is too batch-noisy to compare presets near the entropy floor)."""
    import torch
    import torch.nn.functional as F

    seq = model.config.seq_len
    window = seq + 1
    data = torch.tensor(token_stream[:tokens], dtype=torch.long)
    usable = (len(data) // window) * window
    batch = data[:usable].reshape(-1, window)
    total = 0.0
    count = 0
    with torch.no_grad():
        model.eval()
        for i in range(0, len(batch), 64):
            part = batch[i : i + 64]
            logits = model(part[:, :-1])
            loss = F.cross_entropy(
                logits.reshape(-1, model.config.vocab_size),
                part[:, 1:].reshape(-1),
                reduction="sum",
            )
            total += loss.item()
            count += part[:, 1:].numel()
    return total / count


@pytest.mark.slow
def test_convergence_trend_toward_corpus_tree(tmp_path_factory, session_server):
    """Checkpoints at increasing steps close most of the gap to the corpus
    tree (final MSE <= initial / 5 for both presets), the large preset ends
    at least as close as the small one, and Recall@5 at convergence >= 0.8.
    """
    work = tmp_path_factory.mktemp("convergence")
    started = time.monotonic()

    # Synthetic corpus: vocab-64 first-order chain, 1M tokens, sharp rows.
    stream = _markov_corpus(random.Random(42))
    words = [f"w{t:02d}" for t in range(VOCAB)]
    doc_len = 4096
    corpus_path = work / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as f:
        for i in range(0, len(stream), doc_len):
            text = " ".join(words[t] for t in stream[i : i + doc_len])
            f.write(json.dumps({"id": f"doc{i // doc_len:04d}", "text": text}) + "\n")

    tokenizer = whitespace_tokenizer_from_texts([" ".join(words)])
    spec_path = work / "tokenizer.json"
    write_tokenizer_spec(tokenizer, spec_path)
    token_stream = [tokenizer.vocab[words[t]] for t in stream]

    data_dir = work / "data"
    _run_cli(
        [
            "build-data-tree",
            "--corpus", str(corpus_path),
            "--tokenizer", str(spec_path),
            "--seed-tokens", ",".join(SEED_WORDS),
            "--chunk-len", "512",
            "--min-chars", "0",
            "--tree-max-depth", "4",
            "--out", str(data_dir),
        ],
        {"LANTREE_CACHE_DIR": str(work / "cache")},
    )

    # Train both presets, checkpointing the init, a midpoint, and the end.
    budgets = {"small": (1500, 2e-2), "large": (2500, 6e-3)}
    checkpoints: dict[tuple[str, int], Path] = {}
    eval_ce: dict[str, float] = {}
    for size, (steps, lr) in budgets.items():
        marks = {0: work / f"{size}_0.pt", steps // 4: work / f"{size}_mid.pt",
                 steps: work / f"{size}_final.pt"}
        model, _losses = train_toy(
            token_stream,
            vocab_size=tokenizer.vocab_size,
            steps=steps,
            size=size,
            seq_len=16,
            batch_size=32,
            lr=lr,
            rng_seed=7,
            tokenizer_hash=tokenizer.spec_hash(),
            save_at=marks,
        )
        eval_ce[size] = _mean_cross_entropy(model, token_stream)
        for mark, path in marks.items():
            checkpoints[(size, mark)] = path

    registry = {
        f"{size}_{mark}": ToyLmBackend(path, spec_path)
        for (size, mark), path in checkpoints.items()
    }
    server = session_server(registry)

    # Flatten and compare every checkpoint through the CLI + HTTP loop.
    def measure(model_id: str) -> tuple[float, float]:
        out = work / f"out_{model_id}"
        out.mkdir(exist_ok=True)
        for tree_file in data_dir.glob("data_*.dtree"):
            shutil.copy(tree_file, out / tree_file.name)
        common = [
            "--tokenizer", str(spec_path),
            "--seed-tokens", ",".join(SEED_WORDS),
            "--out", str(out),
        ]
        _run_cli(
            [
                "flatten-gpt",
                *common,
                "--backend", server.base_url,
                "--model", model_id,
                "--depth", "2",
                "--branch", "5",
            ],
            {"LANTREE_CACHE_DIR": str(work / f"cache_{model_id}")},
        )
        _run_cli(["compare", *common])
        report = json.loads((out / "compare_report.json").read_text())
        return report["mse"], report["recall_at_5"]

    mse: dict[tuple[str, int], float] = {}
    recall: dict[tuple[str, int], float] = {}
    for size, (steps, _lr) in budgets.items():
        for mark in (0, steps // 4, steps):
            mse[(size, mark)], recall[(size, mark)] = measure(f"{size}_{mark}")

    small_steps, large_steps = budgets["small"][0], budgets["large"][0]
    small_trend = [mse[("small", m)] for m in (0, small_steps // 4, small_steps)]
    large_trend = [mse[("large", m)] for m in (0, large_steps // 4, large_steps)]
    elapsed = time.monotonic() - started
    _record(
        "convergence trend: small MSE "
        + " -> ".join(f"{v:.2e}" for v in small_trend)
        + f" (x{small_trend[0] / small_trend[-1]:.1f}), large MSE "
        + " -> ".join(f"{v:.2e}" for v in large_trend)
        + f" (x{large_trend[0] / large_trend[-1]:.1f}), large<=small, "
        f"final CE large {eval_ce['large']:.4f} <= small {eval_ce['small']:.4f}, "
        f"recall@5={recall[('large', large_steps)]:.3f} >= 0.8 ({elapsed:.0f}s)",
        small_trend[-1] <= small_trend[0] / 5
        and large_trend[-1] <= large_trend[0] / 5
        and large_trend[-1] <= small_trend[-1]
        and eval_ce["large"] <= eval_ce["small"]
        and recall[("large", large_steps)] >= 0.8,
    )


@pytest.mark.slow
def test_token_bias_trend(tmp_path_factory, session_server):
    """A toy LM trained on the unperturbed QA format loses accuracy when the
    question terminator is swapped: acc_perturbed <= acc_original."""
    work = tmp_path_factory.mktemp("bias")
    started = time.monotonic()

    from lantree.analysis import gen_arithmetic_qa, write_qa_jsonl

    pairs = gen_arithmetic_qa(1000, rng_seed=77, ops={"+"}, decimal_fraction=0.0, max_int=99)
    pairs_path = work / "pairs.jsonl"
    write_qa_jsonl(pairs, pairs_path)

    tokenizer = byte_tokenizer()
    spec_path = work / "byte_tok.json"
    write_tokenizer_spec(tokenizer, spec_path)
    stream: list[int] = []
    for pair in pairs:
        stream.extend(tokenizer.encode(f"{pair.question}\n{pair.answer}"))
        stream.extend(tokenizer.encode("\n"))

    ckpt = work / "qa_model.pt"
    train_toy(
        stream,
        vocab_size=tokenizer.vocab_size,
        steps=3500,
        size="large",
        seq_len=32,
        batch_size=32,
        lr=8e-3,
        rng_seed=3,
        tokenizer_hash=tokenizer.spec_hash(),
        save_at={3500: ckpt},
    )

    server = session_server({"qa_model": ToyLmBackend(ckpt, spec_path)})
    out = work / "out"
    _run_cli(
        [
            "bias-eval",
            "--backend", server.base_url,
            "--model", "qa_model",
            "--pairs", str(pairs_path),
            "--out", str(out),
        ],
        {"LANTREE_CACHE_DIR": str(work / "cache")},
    )
    report = json.loads((out / "bias_report.json").read_text())
    elapsed = time.monotonic() - started
    _record(
        f"token-bias trend: acc_original={report['acc_original']:.3f} -> "
        f"acc_perturbed={report['acc_perturbed']:.3f} on n={report['n']} "
        f"({elapsed:.0f}s)",
        report["acc_perturbed"] <= report["acc_original"]
        and report["acc_original"] > 0.0
        and report["n"] == 1000,
    )
