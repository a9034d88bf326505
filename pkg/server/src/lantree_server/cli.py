"""Server command line: serve backends, train toy checkpoints, build vocabs.

Backend registration syntax (repeatable flags):
    --oracle NAME=TREE.dtree[:TOKENIZER.json]
    --toy    NAME=CKPT.pt:TOKENIZER.json
    --hf     NAME=MODEL_DIR:TOKENIZER.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _log(message: str) -> None:
    print(message, flush=True)


def _split_spec(value: str, flag: str, parts: int) -> list[str]:
    name, _, rest = value.partition("=")
    if not name or not rest:
        raise SystemExit(f"{flag} expects NAME=SPEC, got {value!r}")
    fields = rest.split(":")
    if len(fields) not in (parts, parts - 1):
        raise SystemExit(f"{flag} {name}: expected {parts - 1} or {parts} fields in {rest!r}")
    return [name, *fields]


def build_registry(args: argparse.Namespace) -> dict:
    from lantree_server.backends import FrequencyOracle, HfCausalLmBackend, ToyLmBackend

    registry: dict = {}
    for value in args.oracle or ():
        name, tree, *tok = _split_spec(value, "--oracle", 3)
        registry[name] = FrequencyOracle(tree, tok[0] if tok else None)
        _log(f"registered frequency oracle {name!r} from {tree}")
    for value in args.toy or ():
        name, ckpt, tok = _split_spec(value, "--toy", 3)
        registry[name] = ToyLmBackend(ckpt, tok)
        _log(f"registered toy LM {name!r} from {ckpt}")
    for value in args.hf or ():
        name, model_dir, tok = _split_spec(value, "--hf", 3)
        registry[name] = HfCausalLmBackend(model_dir, tok)
        _log(f"registered causal LM {name!r} from {model_dir}")
    if not registry:
        raise SystemExit("no backends configured; pass --oracle/--toy/--hf")
    return registry


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from lantree_server.app import create_app

    app = create_app(build_registry(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_train_toy(args: argparse.Namespace) -> int:
    from lantree_server.formats import load_tokenizer_spec
    from lantree_server.toy_lm import TrainingDiverged, train_toy

    tokenizer = load_tokenizer_spec(args.tokenizer)
    stream: list[int] = []
    with open(args.corpus, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            stream.extend(tokenizer.encode(record["text"]))
            if tokenizer.kind == "byte_bpe":
                stream.extend(tokenizer.encode("\n"))
    _log(f"train-toy: {len(stream)} tokens, vocab {tokenizer.vocab_size}, size {args.size}")

    ckpt_out = Path(args.ckpt_out)
    ckpt_out.parent.mkdir(parents=True, exist_ok=True)
    marks = sorted({int(s) for s in args.save_at.split(",") if s != ""}) if args.save_at else []
    save_at = {m: ckpt_out.with_name(f"{ckpt_out.stem}_step{m}{ckpt_out.suffix}") for m in marks}
    save_at[args.steps] = ckpt_out
    try:
        _model, losses = train_toy(
            stream,
            vocab_size=tokenizer.vocab_size,
            steps=args.steps,
            size=args.size,
            seq_len=args.seq_len,
            batch_size=args.batch_size,
            lr=args.lr,
            rng_seed=args.rng_seed,
            tokenizer_hash=tokenizer.spec_hash(),
            save_at=save_at,
            on_log=lambda step, loss: _log(f"  step {step}: loss {loss:.4f}"),
        )
    except TrainingDiverged as e:
        _log(f"error: {e}")
        return 1
    final = losses[-1] if losses else float("nan")
    _log(f"train-toy: done, final loss {final:.4f}, checkpoints: "
         + ", ".join(str(p) for p in save_at.values()))
    return 0


def cmd_build_vocab(args: argparse.Namespace) -> int:
    from lantree_server.formats import (
        byte_tokenizer,
        whitespace_tokenizer_from_texts,
        write_tokenizer_spec,
    )

    if args.kind == "byte_bpe":
        tok = byte_tokenizer()
    else:
        texts = []
        with open(args.corpus, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    texts.append(json.loads(line)["text"])
        tok = whitespace_tokenizer_from_texts(texts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_tokenizer_spec(tok, out)
    _log(f"build-vocab: kind={tok.kind} vocab={tok.vocab_size} hash={tok.spec_hash()} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lantree-server", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--oracle", action="append", metavar="NAME=TREE[:TOK]")
    p.add_argument("--toy", action="append", metavar="NAME=CKPT:TOK")
    p.add_argument("--hf", action="append", metavar="NAME=DIR:TOK")

    p = sub.add_parser("train-toy")
    p.add_argument("--corpus", required=True, help="jsonl corpus of {id,text}")
    p.add_argument("--tokenizer", required=True, help="tokenizer spec descriptor")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--size", choices=["small", "large"], default="small")
    p.add_argument("--ckpt-out", required=True)
    p.add_argument("--save-at", default="", help="comma-separated step marks (0 = init)")
    p.add_argument("--seq-len", type=int, default=16)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--rng-seed", type=int, default=0)

    p = sub.add_parser("build-vocab")
    p.add_argument("--corpus", help="jsonl corpus (whitespace kind)")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["whitespace", "byte_bpe"], default="whitespace")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "train-toy":
        return cmd_train_toy(args)
    if args.command == "build-vocab":
        return cmd_build_vocab(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
