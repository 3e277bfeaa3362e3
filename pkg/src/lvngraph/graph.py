"""Immutable CSR-backed graphs and the structural transforms built on them."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class GraphConstructionError(ValueError):
    """Raised when an edge list or subgraph request cannot form a valid graph."""


@dataclass(frozen=True)
class Graph:
    """Unweighted graph in CSR form; rows are sorted, duplicate-free out-neighbor lists.

    Undirected graphs store both directions of every edge, so ``csr_targets``
    holds directed arc endpoints in either mode. Instances are immutable and
    safe to share across workers.
    """

    num_nodes: int
    csr_offsets: np.ndarray
    csr_targets: np.ndarray
    directed: bool
    features: np.ndarray | None = None
    node_labels: np.ndarray | None = None
    graph_label: int | None = None

    def __post_init__(self):
        offsets = np.asarray(self.csr_offsets, dtype=np.int64)
        targets = np.asarray(self.csr_targets, dtype=np.int64)
        object.__setattr__(self, "csr_offsets", offsets)
        object.__setattr__(self, "csr_targets", targets)
        if offsets.shape != (self.num_nodes + 1,):
            raise GraphConstructionError("csr_offsets must have num_nodes + 1 entries")
        if offsets[0] != 0 or np.any(np.diff(offsets) < 0):
            raise GraphConstructionError("csr_offsets must be non-decreasing from 0")
        if offsets[-1] != len(targets):
            raise GraphConstructionError("csr_offsets[-1] must equal len(csr_targets)")
        if len(targets) and (targets.min() < 0 or targets.max() >= self.num_nodes):
            raise GraphConstructionError("csr_targets contains an out-of-range node id")
        for i in range(self.num_nodes):
            row = targets[offsets[i] : offsets[i + 1]]
            if np.any(np.diff(row) <= 0):
                raise GraphConstructionError(f"row {i} is not strictly sorted (duplicate target?)")
            if np.any(row == i):
                raise GraphConstructionError(f"self-loop at node {i}")
        if not self.directed and not _arcs_symmetric(self.num_nodes, offsets, targets):
            raise GraphConstructionError("undirected graph has an asymmetric arc set")
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != self.num_nodes:
                raise GraphConstructionError("features must be a num_nodes x F matrix")
            object.__setattr__(self, "features", feats)
        if self.node_labels is not None:
            labels = np.asarray(self.node_labels, dtype=np.int64)
            if labels.shape != (self.num_nodes,):
                raise GraphConstructionError("node_labels must have one entry per node")
            object.__setattr__(self, "node_labels", labels)

    @property
    def num_arcs(self) -> int:
        return int(len(self.csr_targets))

    @property
    def num_edges(self) -> int:
        """Edge count: undirected edges for undirected graphs, arcs otherwise."""
        return self.num_arcs if self.directed else self.num_arcs // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.csr_targets[self.csr_offsets[v] : self.csr_offsets[v + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.csr_targets, minlength=self.num_nodes)

    def degrees(self) -> np.ndarray:
        """Neighbor counts; equals out-degrees for undirected graphs."""
        return self.out_degrees()

    def arcs(self) -> np.ndarray:
        """All stored (src, dst) pairs as an (m, 2) array."""
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.out_degrees())
        return np.column_stack([src, self.csr_targets])

    def edge_pairs(self) -> set[tuple[int, int]]:
        """Canonical edge set: (u, v) with u < v if undirected, arcs as-is if directed."""
        pairs = self.arcs()
        if not self.directed:
            pairs = pairs[pairs[:, 0] < pairs[:, 1]]
        return {(int(u), int(v)) for u, v in pairs}

    def with_features(self, features: np.ndarray | None) -> "Graph":
        return replace(self, features=features)


@dataclass(frozen=True)
class NodeSubset:
    """Strictly increasing node ids, optionally tagged as the complement of a named set."""

    members: np.ndarray
    complement_of: str | None = None

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.int64)
        object.__setattr__(self, "members", members)
        if members.ndim != 1:
            raise ValueError("members must be a 1-d index array")
        if len(members) and (np.any(np.diff(members) <= 0) or members[0] < 0):
            raise ValueError("members must be strictly increasing and non-negative")

    @classmethod
    def of(cls, nodes, complement_of: str | None = None) -> "NodeSubset":
        return cls(np.unique(np.asarray(list(nodes), dtype=np.int64)), complement_of)

    def __len__(self) -> int:
        return int(len(self.members))

    def validate_for(self, g: Graph) -> None:
        if len(self.members) and self.members[-1] >= g.num_nodes:
            raise ValueError("subset refers to a node beyond the graph")


def _arcs_symmetric(n: int, offsets: np.ndarray, targets: np.ndarray) -> bool:
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    fwd = src * n + targets
    rev = targets * n + src
    return np.array_equal(np.sort(fwd), np.sort(rev))


def build_graph(
    num_nodes: int,
    edge_list,
    directed: bool = False,
    features: np.ndarray | None = None,
    node_labels: np.ndarray | None = None,
    graph_label: int | None = None,
) -> Graph:
    """Build a canonical CSR graph from an edge (or arc) list.

    Duplicate entries are merged; undirected inputs get both directions
    materialized. Self-loops and out-of-range endpoints are rejected.
    """
    if num_nodes < 0:
        raise GraphConstructionError("num_nodes must be non-negative")
    pairs = np.asarray(list(edge_list) if not isinstance(edge_list, np.ndarray) else edge_list, dtype=np.int64)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise GraphConstructionError("edge_list must be a sequence of (u, v) pairs")
    if len(pairs):
        bad = (pairs < 0) | (pairs >= num_nodes)
        if bad.any():
            u, v = pairs[bad.any(axis=1)][0]
            raise GraphConstructionError(f"edge ({u}, {v}) has an endpoint outside [0, {num_nodes})")
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            u, v = pairs[loops][0]
            raise GraphConstructionError(f"self-loop ({u}, {v}) is not allowed")
    if not directed and len(pairs):
        pairs = np.vstack([pairs, pairs[:, ::-1]])
    offsets, targets = _arcs_to_csr(num_nodes, pairs)
    return Graph(
        num_nodes=num_nodes,
        csr_offsets=offsets,
        csr_targets=targets,
        directed=directed,
        features=features,
        node_labels=node_labels,
        graph_label=graph_label,
    )


def arcs_to_graph(
    num_nodes: int,
    arcs,
    directed: bool,
    features: np.ndarray | None = None,
    node_labels: np.ndarray | None = None,
    graph_label: int | None = None,
) -> Graph:
    """Build a graph from explicit arcs (deduplicated, no implicit mirroring).

    Callers constructing undirected graphs must supply both directions.
    """
    pairs = np.asarray(list(arcs) if not isinstance(arcs, np.ndarray) else arcs, dtype=np.int64).reshape(-1, 2)
    offsets, targets = _arcs_to_csr(num_nodes, pairs)
    return Graph(
        num_nodes=num_nodes,
        csr_offsets=offsets,
        csr_targets=targets,
        directed=directed,
        features=features,
        node_labels=node_labels,
        graph_label=graph_label,
    )


def _arcs_to_csr(num_nodes: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(pairs):
        keys = pairs[:, 0] * num_nodes + pairs[:, 1]
        keys = np.unique(keys)
        src = keys // num_nodes
        dst = keys % num_nodes
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=offsets[1:])
    return offsets, dst


def induced_subgraph(g: Graph, keep: NodeSubset) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``keep`` with nodes relabeled to 0..k-1 in ascending original order.

    Returns the subgraph and the old-to-new relabel map (-1 for dropped nodes).
    An edge survives iff both endpoints are kept; feature and label rows are
    filtered to the kept nodes.
    """
    keep.validate_for(g)
    members = keep.members
    if len(members) == 0:
        raise GraphConstructionError("cannot take the induced subgraph on an empty node set")
    old_to_new = np.full(g.num_nodes, -1, dtype=np.int64)
    old_to_new[members] = np.arange(len(members), dtype=np.int64)
    pairs = g.arcs()
    if len(pairs):
        alive = (old_to_new[pairs[:, 0]] >= 0) & (old_to_new[pairs[:, 1]] >= 0)
        pairs = old_to_new[pairs[alive]]
    offsets, targets = _arcs_to_csr(len(members), pairs.reshape(-1, 2))
    sub = Graph(
        num_nodes=len(members),
        csr_offsets=offsets,
        csr_targets=targets,
        directed=g.directed,
        features=None if g.features is None else g.features[members],
        node_labels=None if g.node_labels is None else g.node_labels[members],
        graph_label=g.graph_label,
    )
    return sub, old_to_new


def connected_components(g: Graph) -> np.ndarray:
    """Component id per node; directed graphs are treated as weakly connected.

    Ids are 0-based and assigned in order of each component's smallest node.
    """
    h = symmetrize(g) if g.directed else g
    comp = np.full(g.num_nodes, -1, dtype=np.int64)
    next_id = 0
    for start in range(g.num_nodes):
        if comp[start] >= 0:
            continue
        comp[start] = next_id
        stack = [start]
        while stack:
            v = stack.pop()
            for u in h.neighbors(v):
                if comp[u] < 0:
                    comp[u] = next_id
                    stack.append(int(u))
        next_id += 1
    return comp


def symmetrize(g: Graph) -> Graph:
    """Undirected closure: keep {i, j} whenever either arc direction exists."""
    if not g.directed:
        return g
    pairs = g.arcs()
    both = np.vstack([pairs, pairs[:, ::-1]]) if len(pairs) else pairs
    offsets, targets = _arcs_to_csr(g.num_nodes, both)
    return Graph(
        num_nodes=g.num_nodes,
        csr_offsets=offsets,
        csr_targets=targets,
        directed=False,
        features=g.features,
        node_labels=g.node_labels,
        graph_label=g.graph_label,
    )
