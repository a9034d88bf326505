"""Versioned binary container for both tree kinds, plus a lossless JSON export.

Layout (all integers little-endian):
    magic "MCLT" | u16 version | u8 type (0=data, 1=gpt) | u32 seed
    u32 meta length | canonical-JSON meta bytes
    u64 node count
    preorder node stream:
        data node: u32 token | u64 count | u32 n_children
        gpt  node: u32 token | f64 prob  | u32 n_children

Children are written in canonical order (data: ascending token id; gpt: the
stored descending-probability order), so equal trees serialize to equal bytes.
Truncated or trailing bytes raise TreeFormatError; a partial tree is never
returned.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Union

from lantree.data_tree import DataTree, DataTreeNode
from lantree.errors import TreeFormatError
from lantree.gpt_tree import GptTree, GptTreeNode, TreeShape
from lantree.hashing import canonical_json

MAGIC = b"MCLT"
VERSION = 1
TYPE_DATA = 0
TYPE_GPT = 1

Tree = Union[DataTree, GptTree]


def _write_data_nodes(out: bytearray, root: DataTreeNode) -> int:
    count = 0
    stack = [root]
    while stack:
        node = stack.pop()
        kids = sorted(node.children.values(), key=lambda n: n.token)
        out += struct.pack("<IQI", node.token, node.count, len(kids))
        count += 1
        stack.extend(reversed(kids))  # preorder: leftmost child popped first
    return count


def _write_gpt_nodes(out: bytearray, root: GptTreeNode) -> int:
    count = 0
    stack = [root]
    while stack:
        node = stack.pop()
        out += struct.pack("<IdI", node.token, node.prob, len(node.children))
        count += 1
        stack.extend(reversed(node.children))
    return count


def serialize_tree(tree: Tree) -> bytes:
    is_data = isinstance(tree, DataTree)
    if is_data:
        meta = tree.meta
    else:
        meta = {"backend": tree.backend, "shape": tree.shape.as_dict()}
    meta_bytes = canonical_json(meta).encode("utf-8")
    body = bytearray()
    n = _write_data_nodes(body, tree.root) if is_data else _write_gpt_nodes(body, tree.root)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HBI", VERSION, TYPE_DATA if is_data else TYPE_GPT, tree.seed)
    out += struct.pack("<I", len(meta_bytes))
    out += meta_bytes
    out += struct.pack("<Q", n)
    out += body
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise TreeFormatError("tree file truncated mid-stream")
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def take_bytes(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise TreeFormatError("tree file truncated mid-stream")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk


def deserialize_tree(data: bytes) -> Tree:
    r = _Reader(data)
    if r.take_bytes(4) != MAGIC:
        raise TreeFormatError("not a tree container (bad magic)")
    version, tree_type, seed = r.take("<HBI")
    if version != VERSION:
        raise TreeFormatError(f"unsupported container version {version}")
    if tree_type not in (TYPE_DATA, TYPE_GPT):
        raise TreeFormatError(f"unknown tree type tag {tree_type}")
    (meta_len,) = r.take("<I")
    try:
        meta = json.loads(r.take_bytes(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TreeFormatError(f"corrupt metadata block: {e}") from e
    (node_count,) = r.take("<Q")
    if node_count == 0:
        raise TreeFormatError("container must hold at least the root node")

    fmt = "<IQI" if tree_type == TYPE_DATA else "<IdI"
    root = None
    # stack of (node, children still to read)
    stack: list[list] = []
    for _ in range(node_count):
        token, payload, n_children = r.take(fmt)
        if tree_type == TYPE_DATA:
            node = DataTreeNode(token=token, count=payload)
        else:
            node = GptTreeNode(token=token, prob=payload)
        if root is None:
            root = node
        else:
            while stack and stack[-1][1] == 0:
                stack.pop()
            if not stack:
                raise TreeFormatError("node stream inconsistent with child counts")
            parent, remaining = stack[-1]
            stack[-1][1] = remaining - 1
            if tree_type == TYPE_DATA:
                parent.children[token] = node
            else:
                parent.children.append(node)
        stack.append([node, n_children])
    while stack and stack[-1][1] == 0:
        stack.pop()
    if stack:
        raise TreeFormatError("node stream ended with unfilled children")
    if r.pos != len(data):
        raise TreeFormatError("trailing bytes after node stream")

    if tree_type == TYPE_DATA:
        return DataTree(seed=seed, root=root, meta=meta)
    shape_dict = meta.get("shape", {})
    shape = TreeShape(
        depth_T=int(shape_dict.get("T", 0)),
        branch_K=int(shape_dict.get("K", 0)),
        node_count=int(shape_dict.get("node_count", node_count)),
    )
    return GptTree(seed=seed, root=root, shape=shape, backend=meta.get("backend", {}))


def save_tree(tree: Tree, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(serialize_tree(tree))
    os.replace(tmp, path)


def load_tree(path: str | Path) -> Tree:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise TreeFormatError(f"cannot read tree file {path}: {e}") from e
    return deserialize_tree(data)


def _data_node_json(node: DataTreeNode) -> dict:
    kids = sorted(node.children.values(), key=lambda n: n.token)
    return {"token": node.token, "count": node.count, "children": [_data_node_json(k) for k in kids]}


def _gpt_node_json(node: GptTreeNode) -> dict:
    return {
        "token": node.token,
        "prob": node.prob,
        "children": [_gpt_node_json(k) for k in node.children],
    }


def tree_to_json_dict(tree: Tree) -> dict:
    if isinstance(tree, DataTree):
        return {"type": "data", "seed": tree.seed, "meta": tree.meta, "root": _data_node_json(tree.root)}
    return {
        "type": "gpt",
        "seed": tree.seed,
        "backend": tree.backend,
        "shape": tree.shape.as_dict(),
        "root": _gpt_node_json(tree.root),
    }


def export_tree_json(tree: Tree, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(tree_to_json_dict(tree), f, indent=2, sort_keys=True)
