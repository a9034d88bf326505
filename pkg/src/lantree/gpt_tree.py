"""Top-K, depth-T probability trie flattened out of a probed model.

Nodes store the conditional probability of their token given the path (never
the path product; products are recomputed on demand so storage stays exact).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from lantree.corpus.tokenizers import TokenSeq
from lantree.errors import ProbeError, TreeError

PROB_FLOOR = 1e-9  # children at or below this are treated as dead ends


@dataclass
class GptTreeNode:
    token: int
    prob: float  # conditional probability of this token given the path
    children: list["GptTreeNode"] = field(default_factory=list)


@dataclass(frozen=True)
class TreeShape:
    depth_T: int
    branch_K: int
    node_count: int

    def as_dict(self) -> dict:
        return {"T": self.depth_T, "K": self.branch_K, "node_count": self.node_count}


@dataclass
class GptTree:
    seed: int
    root: GptTreeNode
    shape: TreeShape
    backend: dict  # {"endpoint","model_id","tokenizer_hash"}

    @property
    def tokenizer_hash(self) -> str:
        return self.backend.get("tokenizer_hash", "")

    def node_count(self) -> int:
        total = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            total += 1
            stack.extend(node.children)
        return total


def max_node_count(depth_T: int, branch_K: int) -> int:
    """Geometric bound on nodes of a depth-T, branching-K tree incl. root."""
    if branch_K == 1:
        return depth_T + 1
    return (branch_K ** (depth_T + 1) - 1) // (branch_K - 1)


def path_prob(tree: GptTree, path: TokenSeq) -> Optional[float]:
    """Product of conditional probabilities along the stored path.

    [seed] alone is the empty product (1.0); None once the path leaves the
    flattened frontier.
    """
    if not path or path[0] != tree.seed:
        raise TreeError(f"path must start with seed token {tree.seed}")
    node = tree.root
    prob = 1.0
    for token in path[1:]:
        node = next((c for c in node.children if c.token == token), None)
        if node is None:
            return None
        prob *= node.prob
    return prob


class FlattenInterrupted(ProbeError):
    """Backend failure mid-flatten; a partial-tree checkpoint may exist."""

    def __init__(self, message: str, checkpoint_path: Optional[str] = None) -> None:
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


def flatten_model(
    client,
    seed: int,
    depth_T: int,
    branch_K: int,
    checkpoint_path: Optional[str] = None,
) -> GptTree:
    """Breadth-first top-K expansion of the backend behind ``client``.

    Every node above the depth cap costs exactly one next-token probe with
    top_m = K; nodes whose distribution comes back empty (or entirely below
    the probability floor) simply have no children. If the backend fails the
    partial tree is checkpointed (when a path was given) and
    FlattenInterrupted is raised; re-running with a warm cache reproduces the
    uninterrupted result.
    """
    if depth_T < 1 or branch_K < 1:
        raise ValueError("depth_T and branch_K must be >= 1")
    root = GptTreeNode(token=seed, prob=1.0)
    frontier: list[tuple[GptTreeNode, TokenSeq]] = [(root, [seed])]
    try:
        for _depth in range(depth_T):
            contexts = [path for _node, path in frontier]
            dists = client.next_token_dist_many(contexts, top_m=branch_K)
            next_frontier: list[tuple[GptTreeNode, TokenSeq]] = []
            for (node, path), dist in zip(frontier, dists):
                for token, prob in dist.entries:
                    if prob <= PROB_FLOOR:
                        continue
                    child = GptTreeNode(token=token, prob=prob)
                    node.children.append(child)
                    next_frontier.append((child, path + [token]))
            frontier = next_frontier
            if not frontier:
                break
    except ProbeError as e:
        partial = _assemble(seed, root, depth_T, branch_K, client.descriptor_dict())
        if checkpoint_path is not None:
            from lantree.tree_io import save_tree

            partial.backend["partial"] = True
            save_tree(partial, checkpoint_path)
        raise FlattenInterrupted(
            f"flatten aborted by backend failure: {e}", checkpoint_path
        ) from e
    return _assemble(seed, root, depth_T, branch_K, client.descriptor_dict())


def _assemble(seed, root, depth_T, branch_K, backend: dict) -> GptTree:
    tree = GptTree(
        seed=seed,
        root=root,
        shape=TreeShape(depth_T=depth_T, branch_K=branch_K, node_count=0),
        backend=backend,
    )
    tree.shape = TreeShape(depth_T=depth_T, branch_K=branch_K, node_count=tree.node_count())
    return tree
