"""Deterministic fixture graphs and synthetic benchmark corpora.

The molecule corpus stands in for small-molecule classification benchmarks in
environments where the original flat files are not available: class 1 molecules
are larger on average, atom-type composition differs mildly between classes,
and the topology is tree-plus-rings with average degree near 2.2.
"""

from __future__ import annotations

import numpy as np

from .datasets import GraphDataset
from .graph import Graph, build_graph

# Molecule corpus shape parameters; frozen after calibration of the desk-scale
# classification targets (majority class ~66%, composition-only models ~70%,
# size-aware models ~85%).
_SIZE_MEAN_BY_CLASS = (14.0, 20.2)
_SIZE_SD = 2.6
_SIZE_RANGE = (10, 28)
_CLASS_COUNTS = (63, 125)
_ATOM_P = (
    np.array([0.284, 0.232, 0.170, 0.116, 0.096, 0.066, 0.036]),
    np.array([0.220, 0.200, 0.170, 0.140, 0.120, 0.090, 0.060]),
)
_RING_RATE = 0.11


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> Graph:
    """Hub node 0 connected to leaves 1..n-1."""
    return build_graph(n, [(0, i) for i in range(1, n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def two_clique_bridge(k: int) -> Graph:
    """Two k-cliques {0..k-1} and {k..2k-1} joined by the single edge (k-1, k)."""
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges.append((k - 1, k))
    return build_graph(2 * k, edges)


def barbell_graph(clique_size: int = 6, bridge_nodes: int = 3) -> Graph:
    """Two cliques joined by a path of ``bridge_nodes`` intermediate nodes."""
    k, b = clique_size, bridge_nodes
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    right = k + b
    edges += [(right + i, right + j) for i in range(k) for j in range(i + 1, k)]
    chain = [k - 1] + list(range(k, k + b)) + [right]
    edges += list(zip(chain[:-1], chain[1:]))
    return build_graph(2 * k + b, edges)


def random_connected_graph(rng: np.random.Generator, n: int, extra_edge_rate: float = 0.6) -> Graph:
    """Random spanning tree plus a Poisson number of extra edges; always connected."""
    edges = {(int(min(i, p)), int(max(i, p))) for i, p in ((i, rng.integers(0, i)) for i in range(1, n))}
    for _ in range(rng.poisson(extra_edge_rate * n)):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    return build_graph(n, sorted(edges))


def _molecule_topology(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    # Chain-biased random tree: long backbones with occasional short branches.
    edges = []
    for i in range(1, n):
        parent = i - 1 if rng.random() < 0.8 else int(rng.integers(max(0, i - 4), i))
        edges.append((parent, i))
    edge_set = set(edges)
    for _ in range(int(round(_RING_RATE * n))):
        i = int(rng.integers(4, n)) if n > 4 else None
        if i is None:
            break
        span = int(rng.integers(3, 5))
        pair = (i - span, i) if i - span >= 0 else None
        if pair and pair not in edge_set:
            edge_set.add(pair)
    return sorted(edge_set)


def make_synthetic_molecule_dataset(n_graphs: int = 188, seed: int = 7) -> GraphDataset:
    """Two-class molecule-like corpus with class-correlated size and composition."""
    rng = np.random.default_rng(seed)
    n0 = max(1, round(n_graphs * _CLASS_COUNTS[0] / sum(_CLASS_COUNTS)))
    labels = np.array([0] * n0 + [1] * (n_graphs - n0), dtype=np.int64)
    labels = labels[rng.permutation(n_graphs)]
    num_types = len(_ATOM_P[0])
    graphs = []
    for y in labels:
        n = int(np.clip(round(rng.normal(_SIZE_MEAN_BY_CLASS[y], _SIZE_SD)), *_SIZE_RANGE))
        atoms = rng.choice(num_types, size=n, p=_ATOM_P[y])
        feats = np.zeros((n, num_types), dtype=np.float64)
        feats[np.arange(n), atoms] = 1.0
        graphs.append(build_graph(n, _molecule_topology(rng, n), features=feats, graph_label=int(y)))
    return GraphDataset(tuple(graphs), labels, num_classes=2, feature_dim=num_types)


def make_synthetic_node_graph(
    num_nodes: int = 80,
    num_classes: int = 2,
    feature_dim: int = 8,
    seed: int = 3,
    homophily: float = 0.9,
) -> Graph:
    """Community graph with noisy class-indicating features, for node tasks."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=num_nodes)
    edges = set()
    # Spanning tree within a random order keeps the graph connected.
    order = rng.permutation(num_nodes)
    for a, b in zip(order[:-1], order[1:]):
        edges.add((int(min(a, b)), int(max(a, b))))
    target_edges = num_nodes * 2
    while len(edges) < target_edges:
        u = int(rng.integers(0, num_nodes))
        same = labels == labels[u] if rng.random() < homophily else labels != labels[u]
        pool = np.flatnonzero(same & (np.arange(num_nodes) != u))
        if len(pool) == 0:
            continue
        v = int(rng.choice(pool))
        edges.add((min(u, v), max(u, v)))
    feats = rng.normal(0.0, 1.0, size=(num_nodes, feature_dim))
    feats[np.arange(num_nodes), labels % feature_dim] += 1.5
    return build_graph(num_nodes, sorted(edges), features=feats, node_labels=labels)
