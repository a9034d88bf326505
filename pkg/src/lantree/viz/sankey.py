"""Sankey-document export of either tree kind.

Nodes are path-unique (the same token string reached along two paths becomes
two nodes) but share one deterministic color key per token string. Links out
of a node are emitted in descending probability order, encoding the
left-to-right, widest-first layout convention.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Union

from lantree.corpus.tokenizers import Tokenizer
from lantree.data_tree import DataTree, DataTreeNode
from lantree.gpt_tree import GptTree, GptTreeNode, TreeShape


@dataclass
class SankeyDoc:
    nodes: list[dict] = field(default_factory=list)
    links: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"nodes": self.nodes, "links": self.links}

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SankeyDoc":
        return cls(nodes=list(payload["nodes"]), links=list(payload["links"]))


def color_for_label(label: str) -> str:
    """Stable token-string color: first 3 bytes of the sha256, as #rrggbb."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return "#{:02x}{:02x}{:02x}".format(digest[0], digest[1], digest[2])


def _ranked_children(node: Union[DataTreeNode, GptTreeNode]) -> list[tuple[float, object]]:
    if isinstance(node, DataTreeNode):
        kids = sorted(node.children.values(), key=lambda n: (-n.count, n.token))
        return [(k.count / node.count, k) for k in kids] if node.count else []
    return [(k.prob, k) for k in sorted(node.children, key=lambda n: (-n.prob, n.token))]


def tree_to_sankey(
    tree: Union[DataTree, GptTree],
    tokenizer: Tokenizer,
    max_depth: int,
    max_children: int,
    prob_floor: float = 0.01,
) -> SankeyDoc:
    """Flatten a tree into nodes/links, truncated to max_depth levels and
    max_children branches per node; links below prob_floor are pruned from
    the document (stored trees are never touched)."""
    if max_depth < 0 or max_children < 0:
        raise ValueError("max_depth and max_children must be >= 0")
    doc = SankeyDoc()
    if isinstance(tree, DataTree) and tree.is_empty:
        return doc

    def add_node(token: int) -> int:
        label = tokenizer.decode([token])
        node_id = len(doc.nodes)
        doc.nodes.append({"id": node_id, "label": label, "color": color_for_label(label)})
        return node_id

    root_id = add_node(tree.root.token)
    frontier = deque([(tree.root, root_id, 0)])
    while frontier:
        node, node_id, depth = frontier.popleft()
        if depth >= max_depth:
            continue
        for prob, child in _ranked_children(node)[:max_children]:
            if prob < prob_floor:
                continue
            child_id = add_node(child.token)
            doc.links.append(
                {"source": node_id, "target": child_id, "value": prob, "depth": depth + 1}
            )
            frontier.append((child, child_id, depth + 1))
    return doc


def sankey_to_tree(doc: SankeyDoc, tokenizer: Tokenizer, seed_hint: int | None = None) -> GptTree:
    """Rebuild the probability tree a document encodes (inverse of
    tree_to_sankey up to float round-trip; counts are not recoverable)."""
    token_of: dict[int, int] = {}
    for node in doc.nodes:
        ids = tokenizer.encode(node["label"])
        token_of[node["id"]] = ids[0] if len(ids) == 1 else _token_by_label(tokenizer, node["label"])
    targets = {link["target"] for link in doc.links}
    roots = [n["id"] for n in doc.nodes if n["id"] not in targets]
    if not doc.nodes:
        seed = seed_hint if seed_hint is not None else 0
        return GptTree(
            seed=seed,
            root=GptTreeNode(token=seed, prob=1.0),
            shape=TreeShape(0, 0, 1),
            backend={},
        )
    root_id = roots[0]
    nodes: dict[int, GptTreeNode] = {
        node["id"]: GptTreeNode(token=token_of[node["id"]], prob=1.0) for node in doc.nodes
    }
    max_depth = 0
    for link in doc.links:
        child = nodes[link["target"]]
        child.prob = link["value"]
        nodes[link["source"]].children.append(child)
        max_depth = max(max_depth, link["depth"])
    root = nodes[root_id]
    tree = GptTree(
        seed=root.token,
        root=root,
        shape=TreeShape(depth_T=max_depth, branch_K=0, node_count=len(doc.nodes)),
        backend={},
    )
    return tree


def _token_by_label(tokenizer: Tokenizer, label: str) -> int:
    for token_id in tokenizer.id_to_token:
        if tokenizer.decode([token_id]) == label:
            return token_id
    raise ValueError(f"no single token decodes to {label!r}")
