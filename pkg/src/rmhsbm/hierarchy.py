"""Rooted trees, repeated-motif hierarchy specs and their flat-SBM view.

A hierarchy spec is a rooted tree whose leaves are the flat blocks, a motif
level, and a map from each node at that level (a *metablock*) to a motif
label.  Flattening turns the per-level and per-motif probability matrices
into one symmetric K* x K* matrix; :func:`build_parameter_groups` lists the
block-pair cells that the hierarchy forces to share a probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


class SpecError(ValueError):
    """Malformed hierarchy spec; the message names the offending key/index."""


@dataclass(frozen=True)
class RootedTree:
    """Rooted tree on dense node ids ``0..node_count-1`` with root ``0``.

    Children are ordered by node id, which fixes the depth-first left-to-right
    leaf order used for flat block numbering.
    """

    parent: tuple[int, ...]

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        object.__setattr__(self, "parent", parent)
        n = len(parent)
        if n == 0:
            raise SpecError("nodes: tree must have at least one node")
        if parent[0] != -1:
            raise SpecError(f"nodes[0]: root must have parent -1, got {parent[0]}")
        for i, p in enumerate(parent[1:], start=1):
            if p == -1:
                raise SpecError(f"nodes[{i}]: second root (only node 0 may have parent -1)")
            if not 0 <= p < n:
                raise SpecError(f"nodes[{i}]: parent {p} out of range")
            if p == i:
                raise SpecError(f"nodes[{i}]: node is its own parent")
        # every parent chain must reach the root within n steps
        for i in range(n):
            node, steps = i, 0
            while node != 0:
                node = parent[node]
                steps += 1
                if steps >= n:
                    raise SpecError(f"nodes[{i}]: parent chain contains a cycle")

    @property
    def node_count(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return 0

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for node, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(node)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def depth(self) -> tuple[int, ...]:
        out = [0] * self.node_count
        for node in self._preorder:
            if node:
                out[node] = out[self.parent[node]] + 1
        return tuple(out)

    @cached_property
    def _preorder(self) -> tuple[int, ...]:
        order, stack = [], [0]
        while stack:
            node = stack.pop()
            order.append(node)
            stack.extend(reversed(self.children[node]))
        return tuple(order)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        """Leaves in depth-first left-to-right order."""
        return tuple(v for v in self._preorder if not self.children[v])

    @cached_property
    def internal(self) -> tuple[int, ...]:
        return tuple(v for v in self._preorder if self.children[v])

    def is_leaf(self, node: int) -> bool:
        return not self.children[self._check(node)]

    def path(self, node: int) -> list[int]:
        """Nodes on the path from the root down to ``node`` (inclusive)."""
        node = self._check(node)
        out = [node]
        while node != 0:
            node = self.parent[node]
            out.append(node)
        return out[::-1]

    def leaves_under(self, node: int) -> tuple[int, ...]:
        node = self._check(node)
        out, stack = [], [node]
        while stack:
            v = stack.pop()
            if not self.children[v]:
                out.append(v)
            stack.extend(reversed(self.children[v]))
        return tuple(out)

    def nodes_at_depth(self, d: int) -> tuple[int, ...]:
        return tuple(v for v in self._preorder if self.depth[v] == d)

    def shape(self, node: int) -> tuple:
        """Canonical nested-tuple shape of the subtree rooted at ``node``."""
        return tuple(self.shape(c) for c in self.children[self._check(node)])

    def _check(self, node: int) -> int:
        if isinstance(node, (bool, np.bool_)) or not 0 <= int(node) < self.node_count:
            raise ValueError(f"unknown node id {node!r}")
        return int(node)


def lca(tree: RootedTree, a: int, b: int) -> int:
    """Lowest common ancestor of ``a`` and ``b``."""
    a, b = tree._check(a), tree._check(b)
    depth = tree.depth
    while depth[a] > depth[b]:
        a = tree.parent[a]
    while depth[b] > depth[a]:
        b = tree.parent[b]
    while a != b:
        a, b = tree.parent[a], tree.parent[b]
    return a


def lca_down(tree: RootedTree, a: int, b: int) -> tuple[int, int]:
    """Children of ``lca(a, b)`` on the paths toward ``a`` and toward ``b``.

    Raises ValueError when ``a == b`` or one node is an ancestor of the other.
    """
    c = lca(tree, a, b)
    if c in (a, b):
        raise ValueError(f"nodes {a} and {b} are equal or in ancestor relation")
    d = tree.depth[c] + 1
    return tree.path(a)[d], tree.path(b)[d]


@dataclass(frozen=True)
class Motif:
    label: str
    leaf_count: int


@dataclass(frozen=True)
class HierarchySpec:
    """Tree, motif level, motif library and metablock-to-motif map."""

    tree: RootedTree
    motif_level: int
    motifs: tuple[Motif, ...]
    motif_map: Mapping[int, str]
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "motifs", tuple(self.motifs))
        object.__setattr__(self, "motif_map", {int(k): str(v) for k, v in dict(self.motif_map).items()})
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))
        self._validate()

    def _validate(self) -> None:
        tree, level = self.tree, self.motif_level
        if isinstance(level, bool) or int(level) != level or level < 1:
            raise SpecError(f"motif_level: must be an integer >= 1, got {level!r}")
        labels = {}
        for i, m in enumerate(self.motifs):
            if m.label in labels:
                raise SpecError(f"motifs[{i}]: duplicate label {m.label!r}")
            if int(m.leaf_count) != m.leaf_count or m.leaf_count < 1:
                raise SpecError(f"motifs[{i}].leaf_count: must be a positive integer")
            labels[m.label] = m
        for leaf in tree.leaves:
            if tree.depth[leaf] < level:
                raise SpecError(
                    f"motif_level: leaf {leaf} at depth {tree.depth[leaf]} lies above the motif level {level}"
                )
        metablocks = set(tree.nodes_at_depth(level))
        for node, label in self.motif_map.items():
            if node not in metablocks:
                raise SpecError(f"motif_map[{node}]: node is not at depth {level}")
            if label not in labels:
                raise SpecError(f"motif_map[{node}]: unknown motif {label!r}")
        shapes: dict[str, tuple] = {}
        for node in sorted(metablocks):
            if node not in self.motif_map:
                raise SpecError(f"motif_map[{node}]: metablock at depth {level} is not mapped")
            label = self.motif_map[node]
            n_leaves = len(tree.leaves_under(node))
            if n_leaves != labels[label].leaf_count:
                raise SpecError(
                    f"motif_map[{node}]: metablock has {n_leaves} leaves but motif "
                    f"{label!r} declares leaf_count {labels[label].leaf_count}"
                )
            shape = tree.shape(node)
            if shapes.setdefault(label, shape) != shape:
                raise SpecError(f"motif_map[{node}]: subtree shape differs from other copies of {label!r}")
        if len(self.block_sizes) != len(tree.leaves):
            raise SpecError(
                f"block_sizes: expected {len(tree.leaves)} entries (one per leaf), got {len(self.block_sizes)}"
            )
        for i, s in enumerate(self.block_sizes):
            if s < 1:
                raise SpecError(f"block_sizes[{i}]: must be >= 1, got {s}")

    @property
    def k_star(self) -> int:
        return len(self.tree.leaves)

    @property
    def leaf_order(self) -> tuple[int, ...]:
        return self.tree.leaves

    @cached_property
    def metablocks(self) -> tuple[int, ...]:
        return self.tree.nodes_at_depth(self.motif_level)

    @cached_property
    def block_metablock(self) -> np.ndarray:
        """Metablock node id of each flat block."""
        out = np.empty(self.k_star, dtype=np.int64)
        for k, leaf in enumerate(self.leaf_order):
            out[k] = self.tree.path(leaf)[self.motif_level]
        return out

    @cached_property
    def block_local_index(self) -> np.ndarray:
        """Position of each flat block among the leaves of its metablock."""
        out = np.empty(self.k_star, dtype=np.int64)
        for m in self.metablocks:
            for i, leaf in enumerate(self.tree.leaves_under(m)):
                out[self.leaf_order.index(leaf)] = i
        return out

    @property
    def n_vertices(self) -> int:
        return int(sum(self.block_sizes))

    def motif_of(self, metablock: int) -> str:
        return self.motif_map[metablock]

    def default_traversal(self) -> np.ndarray:
        """Vertex -> leaf node id, assigning vertices to leaves contiguously."""
        return np.repeat(np.asarray(self.leaf_order, dtype=np.int64), self.block_sizes)

    def default_membership(self) -> np.ndarray:
        return membership_from_sizes(self.block_sizes)

    def with_block_sizes(self, sizes: int | Sequence[int]) -> "HierarchySpec":
        if np.isscalar(sizes):
            sizes = [int(sizes)] * self.k_star
        return HierarchySpec(self.tree, self.motif_level, self.motifs, self.motif_map, tuple(sizes))

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": list(self.tree.parent),
            "motif_level": self.motif_level,
            "motifs": [{"label": m.label, "leaf_count": m.leaf_count} for m in self.motifs],
            "motif_map": {str(k): v for k, v in sorted(self.motif_map.items())},
            "block_sizes": list(self.block_sizes),
        }


def membership_from_sizes(sizes: Sequence[int]) -> np.ndarray:
    """Contiguous membership vector: the first ``sizes[0]`` vertices in block 0, ..."""
    return np.repeat(np.arange(len(sizes), dtype=np.int64), np.asarray(sizes, dtype=np.int64))


def spec_from_dict(data: Mapping[str, Any]) -> HierarchySpec:
    """Build a spec from its JSON object form."""
    if not isinstance(data, Mapping):
        raise SpecError("spec: top-level value must be a JSON object")
    for key in ("nodes", "motif_level", "motifs", "motif_map", "block_sizes"):
        if key not in data:
            raise SpecError(f"{key}: missing required key")
    nodes = data["nodes"]
    if not isinstance(nodes, list):
        raise SpecError("nodes: must be an array of parent ids")
    for i, p in enumerate(nodes):
        if isinstance(p, bool) or not isinstance(p, int):
            raise SpecError(f"nodes[{i}]: parent id must be an integer, got {p!r}")
    motifs = []
    if not isinstance(data["motifs"], list):
        raise SpecError("motifs: must be an array")
    for i, m in enumerate(data["motifs"]):
        if not isinstance(m, Mapping) or "label" not in m or "leaf_count" not in m:
            raise SpecError(f"motifs[{i}]: expected an object with 'label' and 'leaf_count'")
        lc = m["leaf_count"]
        if isinstance(lc, bool) or not isinstance(lc, int):
            raise SpecError(f"motifs[{i}].leaf_count: must be an integer, got {lc!r}")
        motifs.append(Motif(str(m["label"]), lc))
    if not isinstance(data["motif_map"], Mapping):
        raise SpecError("motif_map: must be an object mapping node id to motif label")
    motif_map = {}
    for k, v in data["motif_map"].items():
        try:
            motif_map[int(k)] = str(v)
        except (TypeError, ValueError):
            raise SpecError(f"motif_map[{k!r}]: key must be an integer node id") from None
    sizes = data["block_sizes"]
    if not isinstance(sizes, list):
        raise SpecError("block_sizes: must be an array")
    for i, s in enumerate(sizes):
        if isinstance(s, bool) or not isinstance(s, int):
            raise SpecError(f"block_sizes[{i}]: must be an integer, got {s!r}")
    level = data["motif_level"]
    if isinstance(level, bool) or not isinstance(level, int):
        raise SpecError(f"motif_level: must be an integer, got {level!r}")
    return HierarchySpec(RootedTree(tuple(nodes)), level, tuple(motifs), motif_map, tuple(sizes))


def load_spec(path: str | Path) -> HierarchySpec:
    """Read a hierarchy spec JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(data)


def two_level_spec(
    motif_sequence: Sequence[str],
    leaves_per_motif: Mapping[str, int],
    block_size: int | Sequence[int],
) -> HierarchySpec:
    """Root -> metablocks -> leaf blocks, with metablock i mapped to ``motif_sequence[i]``."""
    parent = [-1]
    motif_map = {}
    for label in motif_sequence:
        node = len(parent)
        parent.append(0)
        motif_map[node] = label
    for node, label in list(motif_map.items()):
        parent.extend([node] * leaves_per_motif[label])
    used = list(dict.fromkeys(motif_sequence))
    motifs = tuple(Motif(lbl, leaves_per_motif[lbl]) for lbl in used)
    k = sum(leaves_per_motif[lbl] for lbl in motif_sequence)
    sizes = [block_size] * k if np.isscalar(block_size) else list(block_size)
    return HierarchySpec(RootedTree(tuple(parent)), 1, motifs, motif_map, tuple(sizes))


_BUNDLED = Path(__file__).with_name("data")


def bundled_spec(name: str) -> HierarchySpec:
    """Load one of the specs shipped in ``rmhsbm/data`` by file stem."""
    path = _BUNDLED / f"{name}.json"
    if not path.exists():
        names = sorted(p.stem for p in _BUNDLED.glob("*.json"))
        raise FileNotFoundError(f"no bundled spec {name!r}; available: {names}")
    return load_spec(path)


def resolve_spec(spec: str | Path | HierarchySpec) -> HierarchySpec:
    """Accept a spec object, a bundled spec name or a path to a JSON file."""
    if isinstance(spec, HierarchySpec):
        return spec
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_spec(path)
    return bundled_spec(str(spec))


# -- flat model ---------------------------------------------------------------


@dataclass(frozen=True)
class FlatModel:
    """Flat SBM: symmetric block probability matrix plus block sizes."""

    B: np.ndarray
    block_sizes: np.ndarray = field(default=None)

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError(f"B must be square, got shape {B.shape}")
        if not np.array_equal(B, B.T):
            raise ValueError("B must be symmetric")
        if np.isnan(B).any() or (B < 0).any() or (B > 1).any():
            raise ValueError("B entries must lie in [0, 1]")
        sizes = self.block_sizes
        sizes = np.ones(B.shape[0], dtype=np.int64) if sizes is None else np.array(sizes, dtype=np.int64)
        if sizes.shape != (B.shape[0],):
            raise ValueError(f"block_sizes must have length {B.shape[0]}")
        if (sizes < 0).any():
            raise ValueError("block_sizes must be nonnegative")
        B.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def k_star(self) -> int:
        return self.B.shape[0]

    def dyad_counts(self) -> np.ndarray:
        return dyad_counts(self.block_sizes)

    def effective(self, index: int = 0) -> np.ndarray:
        return self.B


def dyad_counts(block_sizes: Sequence[int]) -> np.ndarray:
    """K x K dyad counts: s_l * s_k off the diagonal, C(s_l, 2) on it."""
    s = np.asarray(block_sizes, dtype=np.int64)
    n = np.outer(s, s)
    np.fill_diagonal(n, s * (s - 1) // 2)
    return n


def _check_prob_matrix(name: str, M: Any, size: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (size, size):
        raise ValueError(f"{name}: expected a {size}x{size} matrix, got shape {M.shape}")
    if np.isnan(M).any() or (M < 0).any() or (M > 1).any():
        raise ValueError(f"{name}: entries must lie in [0, 1]")
    if not np.allclose(M, M.T, rtol=0, atol=0):
        raise ValueError(f"{name}: matrix must be symmetric")
    return M


def flatten_model(
    spec: HierarchySpec,
    level_matrices: Mapping[int, Any],
    motif_matrices: Mapping[str, Any],
) -> FlatModel:
    """Write the hierarchical model as a flat K* x K* SBM.

    ``level_matrices[v]`` is the children-by-children matrix of internal node
    ``v`` above the motif level (only off-diagonal entries are read: the
    within-child probabilities come from the child's own model).
    ``motif_matrices[label]`` is the leaf-by-leaf matrix of a motif.
    """
    tree = spec.tree
    K = spec.k_star
    mats = {}
    for label in {m.label for m in spec.motifs}:
        if label not in motif_matrices:
            raise ValueError(f"motif_matrices: missing matrix for motif {label!r}")
        size = next(m.leaf_count for m in spec.motifs if m.label == label)
        mats[label] = _check_prob_matrix(f"motif_matrices[{label!r}]", motif_matrices[label], size)
    levels = {}
    for v in tree.internal:
        if tree.depth[v] >= spec.motif_level or len(tree.children[v]) < 2:
            continue
        if v not in level_matrices:
            raise ValueError(f"level_matrices: missing matrix for node {v}")
        levels[v] = _check_prob_matrix(f"level_matrices[{v}]", level_matrices[v], len(tree.children[v]))

    meta = spec.block_metablock
    local = spec.block_local_index
    leaves = spec.leaf_order
    B = np.empty((K, K))
    for i in range(K):
        for j in range(i, K):
            if meta[i] == meta[j]:
                val = mats[spec.motif_map[int(meta[i])]][local[i], local[j]]
            else:
                c = lca(tree, leaves[i], leaves[j])
                ca, cb = lca_down(tree, leaves[i], leaves[j])
                kids = tree.children[c]
                val = levels[c][kids.index(ca), kids.index(cb)]
            B[i, j] = B[j, i] = val
    return FlatModel(B, np.asarray(spec.block_sizes))


def random_hierarchy_parameters(
    spec: HierarchySpec, rng: np.random.Generator
) -> tuple[dict[int, np.ndarray], dict[str, np.ndarray]]:
    """Draw level and motif matrices i.i.d. uniform, honouring the motif ties.

    At the parent of the metablocks, the entry between two children depends
    only on the (unordered) pair of their motifs.
    """
    tree = spec.tree
    motif_mats = {}
    for m in spec.motifs:
        U = rng.uniform(size=(m.leaf_count, m.leaf_count))
        motif_mats[m.label] = np.triu(U) + np.triu(U, 1).T
    level_mats = {}
    for v in tree.internal:
        if tree.depth[v] >= spec.motif_level:
            continue
        kids = tree.children[v]
        M = np.zeros((len(kids), len(kids)))
        if tree.depth[v] == spec.motif_level - 1:
            by_pair: dict[tuple[str, str], float] = {}
            for a in range(len(kids)):
                for b in range(a + 1, len(kids)):
                    key = tuple(sorted((spec.motif_map[kids[a]], spec.motif_map[kids[b]])))
                    if key not in by_pair:
                        by_pair[key] = rng.uniform()
                    M[a, b] = M[b, a] = by_pair[key]
        else:
            U = rng.uniform(size=M.shape)
            M = np.triu(U, 1) + np.triu(U, 1).T
        level_mats[v] = M
    return level_mats, motif_mats


# -- parameter groups ------------------------------------------------------------


@dataclass(frozen=True)
class ParameterGroups:
    """Partition of the K*(K*+1)/2 unordered block-pair cells into tied groups."""

    k_star: int
    members: tuple[tuple[tuple[int, int], ...], ...]
    keys: tuple = ()

    def __post_init__(self):
        members = tuple(tuple((min(a, b), max(a, b)) for a, b in g) for g in self.members)
        object.__setattr__(self, "members", members)
        K = self.k_star
        seen = np.full((K, K), -1, dtype=np.int64)
        for gid, cells in enumerate(members):
            if not cells:
                raise ValueError(f"group {gid} is empty")
            for a, b in cells:
                if not (0 <= a < K and 0 <= b < K):
                    raise ValueError(f"group {gid}: cell {(a, b)} out of range for K*={K}")
                if seen[a, b] >= 0:
                    raise ValueError(f"cell {(a, b)} appears in groups {seen[a, b]} and {gid}")
                seen[a, b] = seen[b, a] = gid
        if (seen < 0).any():
            a, b = np.argwhere(seen < 0)[0]
            raise ValueError(f"cell {(int(a), int(b))} is not covered by any group")
        seen.setflags(write=False)
        object.__setattr__(self, "_index", seen)
        if not self.keys:
            object.__setattr__(self, "keys", tuple(range(len(members))))

    @classmethod
    def from_cell_index(cls, index: Any, keys: Sequence = ()) -> "ParameterGroups":
        """Groups from a symmetric K x K matrix of group labels."""
        index = np.asarray(index)
        K = index.shape[0]
        rows, cols = np.triu_indices(K)
        order: dict[Any, int] = {}
        members: list[list[tuple[int, int]]] = []
        for a, b in zip(rows, cols):
            lab = index[a, b].item() if hasattr(index[a, b], "item") else index[a, b]
            if lab not in order:
                order[lab] = len(members)
                members.append([])
            members[order[lab]].append((int(a), int(b)))
        return cls(K, tuple(tuple(m) for m in members), tuple(keys) or tuple(order))

    @property
    def cell_index(self) -> np.ndarray:
        """Symmetric K x K matrix of group ids."""
        return self._index

    def __len__(self) -> int:
        return len(self.members)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(m) for m in self.members], dtype=np.int64)

    @property
    def testable(self) -> np.ndarray:
        """Groups with at least two cells (df >= 1)."""
        return self.sizes >= 2

    @property
    def n_cells(self) -> int:
        return self.k_star * (self.k_star + 1) // 2

    @cached_property
    def upper_cells(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, group ids) of every upper-triangle cell, row-major."""
        rows, cols = np.triu_indices(self.k_star)
        return rows, cols, self._index[rows, cols]

    def group_sum(self, matrix: np.ndarray) -> np.ndarray:
        """Sum a symmetric K x K array over the cells of each group."""
        rows, cols, gid = self.upper_cells
        return np.bincount(gid, weights=np.asarray(matrix, dtype=float)[rows, cols], minlength=len(self))

    def broadcast(self, values: Sequence[float]) -> np.ndarray:
        """K x K matrix carrying each group's value on all of its cells."""
        return np.asarray(values, dtype=float)[self._index]

    def penalty_dof(self) -> int:
        """Sum over groups of (|group| - 1)."""
        return int((self.sizes - 1).sum())

    def to_rows(self) -> list[dict[str, Any]]:
        return [
            {"group_id": gid, "size": len(cells), "key": _key_str(self.keys[gid]), "cells": [list(c) for c in cells]}
            for gid, cells in enumerate(self.members)
        ]


def _key_str(key: Any) -> str:
    if isinstance(key, tuple):
        return ":".join(_key_str(k) for k in key)
    return str(key)


def _cell_key(spec: HierarchySpec, i: int, j: int) -> tuple:
    meta = spec.block_metablock
    if meta[i] == meta[j]:
        a, b = sorted((int(spec.block_local_index[i]), int(spec.block_local_index[j])))
        return ("motif", spec.motif_map[int(meta[i])], a, b)
    tree = spec.tree
    mi, mj = int(meta[i]), int(meta[j])
    c = lca(tree, mi, mj)
    ca, cb = lca_down(tree, mi, mj)
    if tree.depth[c] == spec.motif_level - 1:
        # siblings at the motif level: ties follow the motif pair
        return ("cross", c, *sorted((spec.motif_map[ca], spec.motif_map[cb])))
    return ("level", c, *sorted((ca, cb)))


def build_parameter_groups(spec: HierarchySpec) -> ParameterGroups:
    """Tied parameter groups implied by the repeated-motif hierarchy.

    Cells inside a metablock tie across all copies of its motif by their
    motif-internal indices.  Cells between two metablocks take the parameter
    of their lowest common ancestor for the pair of children on the way down;
    directly below that ancestor at the motif level, only the motif pair
    matters.
    """
    K = spec.k_star
    labels = np.empty((K, K), dtype=object)
    for i in range(K):
        for j in range(i, K):
            labels[i, j] = labels[j, i] = _cell_key(spec, i, j)
    return ParameterGroups.from_cell_index(labels)


def check_compatibility(tau: Any, spec: HierarchySpec, traversal: Any = None) -> bool:
    """True iff ``tau`` and the traversal induce the same vertex partition.

    ``traversal`` maps vertex -> leaf node id; by default vertices are
    assigned to leaves contiguously following ``spec.block_sizes``.
    """
    try:
        tau = np.asarray(tau)
        trav = spec.default_traversal() if traversal is None else np.asarray(traversal)
        if tau.ndim != 1 or tau.shape != trav.shape:
            return False
        if tau.size and (tau.min() < 0 or tau.max() >= spec.k_star):
            return False
        pairs = len(set(zip(tau.tolist(), trav.tolist())))
        return pairs == len(set(tau.tolist())) == len(set(trav.tolist()))
    except (TypeError, ValueError):
        return False


def iter_cells(k_star: int) -> Iterable[tuple[int, int]]:
    for a in range(k_star):
        for b in range(a, k_star):
            yield a, b
