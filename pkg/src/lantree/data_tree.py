"""Conditional-frequency trie over token sequences.

Every node stores the exact occurrence count of the path from the root, so
any edge's conditional probability is a ratio of two integers and never
drifts. Counts are only ever added, which makes partition-and-merge builds
equal a single-pass build.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from lantree.corpus.chunking import Chunk
from lantree.corpus.tokenizers import TokenSeq
from lantree.errors import TreeError
from lantree.hashing import MultisetHash, canonical_digest

ANY_OCCURRENCE = "any_occurrence"
CHUNK_INITIAL = "chunk_initial"
DEFAULT_MAX_DEPTH = 10


@dataclass
class DataTreeNode:
    token: int
    count: int = 0
    children: dict[int, "DataTreeNode"] = field(default_factory=dict)

    def child(self, token: int) -> "DataTreeNode":
        node = self.children.get(token)
        if node is None:
            node = DataTreeNode(token=token)
            self.children[token] = node
        return node


@dataclass
class DataTree:
    seed: int
    root: DataTreeNode
    meta: dict

    @property
    def tokenizer_hash(self) -> str:
        return self.meta.get("tokenizer_hash", "")

    @property
    def is_empty(self) -> bool:
        return self.root.count == 0

    def node_count(self) -> int:
        total = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            total += 1
            stack.extend(node.children.values())
        return total

    def walk(self, context: TokenSeq) -> Optional[DataTreeNode]:
        """Node at the end of ``context`` (which must start at the seed), or
        None when the context was never observed."""
        if not context or context[0] != self.seed:
            raise TreeError(f"context must start with seed token {self.seed}")
        node = self.root
        if node.count == 0:
            return None
        for token in context[1:]:
            node = node.children.get(token)
            if node is None:
                return None
        return node


def _chunk_digest_item(chunk: Chunk) -> dict:
    return {"doc_id": chunk.doc_id, "offset": chunk.offset, "tokens": chunk.tokens}


def build_data_tree(
    chunks: Iterable[Chunk],
    seed: int,
    max_depth: int = DEFAULT_MAX_DEPTH,
    mode: str = ANY_OCCURRENCE,
    tokenizer_hash: str = "",
) -> DataTree:
    """Count every within-chunk continuation of the seed token.

    For each occurrence of ``seed`` (anywhere in a chunk, or only at chunk
    starts under ``chunk_initial``), the occurrence plus its next
    ``max_depth`` tokens are inserted as a path and every node on the path is
    incremented. A seed that never occurs yields an empty tree (root count 0),
    not an error.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if mode not in (ANY_OCCURRENCE, CHUNK_INITIAL):
        raise ValueError(f"unknown mode {mode!r}")
    root = DataTreeNode(token=seed)
    corpus_hash = MultisetHash()
    for chunk in chunks:
        corpus_hash.add(_chunk_digest_item(chunk))
        tokens = chunk.tokens
        if mode == CHUNK_INITIAL:
            positions = [0] if tokens and tokens[0] == seed else []
        else:
            positions = [i for i, t in enumerate(tokens) if t == seed]
        for pos in positions:
            root.count += 1
            node = root
            for token in tokens[pos + 1 : pos + 1 + max_depth]:
                node = node.child(token)
                node.count += 1
    meta = {
        "tokenizer_hash": tokenizer_hash,
        "corpus_hash": corpus_hash.hexdigest(),
        "build_config": {"max_depth": max_depth, "mode": mode},
    }
    return DataTree(seed=seed, root=root, meta=meta)


def conditional_prob(tree: DataTree, context: TokenSeq, next_token: int) -> Optional[float]:
    """N(context + next) / N(context); None when the context is absent.

    A covered context with an unseen continuation is probability 0.0, which is
    different from an absent context (None).
    """
    node = tree.walk(context)
    if node is None or node.count == 0:
        return None
    child = node.children.get(next_token)
    return 0.0 if child is None else child.count / node.count


def top_k_children(tree: DataTree, context: TokenSeq, k: int) -> Optional[list[tuple[int, float]]]:
    """The k most probable continuations, descending, ties by ascending id.

    Returns None when the context itself is absent from the tree.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    node = tree.walk(context)
    if node is None or node.count == 0:
        return None
    ranked = sorted(node.children.values(), key=lambda n: (-n.count, n.token))
    return [(n.token, n.count / node.count) for n in ranked[:k]]


def _merge_nodes(dst: DataTreeNode, src: DataTreeNode) -> None:
    dst.count += src.count
    for token, child in src.children.items():
        _merge_nodes(dst.child(token), child)


def merge(trees: list[DataTree]) -> DataTree:
    """Elementwise-sum counts over the union of paths.

    Requires identical seed, tokenizer hash, and build config; the result
    equals a single-pass build over the concatenated chunk streams.
    """
    if not trees:
        raise TreeError("merge requires at least one tree")
    first = trees[0]
    root = DataTreeNode(token=first.seed)
    combined = MultisetHash()
    for tree in trees:
        if tree.seed != first.seed:
            raise TreeError(f"seed mismatch in merge: {tree.seed} != {first.seed}")
        if tree.tokenizer_hash != first.tokenizer_hash:
            raise TreeError("tokenizer hash mismatch in merge")
        if tree.meta.get("build_config") != first.meta.get("build_config"):
            raise TreeError("build config mismatch in merge")
        combined.combine(MultisetHash(int(tree.meta.get("corpus_hash", "0"), 16)))
        _merge_nodes(root, tree.root)
    meta = {
        "tokenizer_hash": first.tokenizer_hash,
        "corpus_hash": combined.hexdigest(),
        "build_config": dict(first.meta.get("build_config", {})),
    }
    return DataTree(seed=first.seed, root=root, meta=meta)


def build_data_tree_parallel(
    chunks: list[Chunk],
    seed: int,
    max_depth: int = DEFAULT_MAX_DEPTH,
    mode: str = ANY_OCCURRENCE,
    tokenizer_hash: str = "",
    workers: int = 1,
) -> DataTree:
    """Partition the chunk list, build per partition, merge associatively."""
    from concurrent.futures import ThreadPoolExecutor

    if workers <= 1:
        return build_data_tree(chunks, seed, max_depth, mode, tokenizer_hash)
    parts = [chunks[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        built = list(
            pool.map(lambda part: build_data_tree(part, seed, max_depth, mode, tokenizer_hash), parts)
        )
    return merge(built)


def data_tree_config_digest(tree: DataTree) -> str:
    return canonical_digest({"seed": tree.seed, "meta": tree.meta})
