"""Shared fixtures and independent oracle implementations used across tests.

The oracles deliberately avoid the library's own code paths: resistances come
from dense pseudoinverse / grounded solves, spectra from LAPACK, walk counts
from explicit matrix powers, and augmented edge sets from a literal set
construction.
"""

from __future__ import annotations

import numpy as np
import pytest

from lvngraph.centrality import CentralSelection
from lvngraph.graph import Graph, build_graph


def dense_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.num_nodes, g.num_nodes))
    for u, v in g.arcs():
        a[u, v] = 1.0
    return a


def dense_laplacian(g: Graph) -> np.ndarray:
    a = dense_adjacency(g)
    return np.diag(a.sum(axis=1)) - a


def oracle_resistance_pinv(g: Graph, u: int, v: int) -> float:
    """Resistance via the dense Moore-Penrose pseudoinverse."""
    pinv = np.linalg.pinv(dense_laplacian(g))
    e = np.zeros(g.num_nodes)
    e[u], e[v] = 1.0, -1.0
    return float(e @ pinv @ e)

def oracle_resistance_grounded(g: Graph, u: int, v: int, ground: int | None = None) -> float:
    """Resistance via a grounded-Laplacian direct solve (independent route)."""
    lap = dense_laplacian(g)
    n = g.num_nodes
    if ground is None:
        ground = next(i for i in range(n) if i != u and i != v)
    keep = [i for i in range(n) if i != ground]
    rhs = np.zeros(n)
    rhs[u], rhs[v] = 1.0, -1.0
    x = np.linalg.solve(lap[np.ix_(keep, keep)], rhs[keep])
    full = np.zeros(n)
    full[keep] = x
    return float(full[u] - full[v])


def oracle_total_resistance(g: Graph, members) -> float:
    """Pairwise pseudoinverse resistances summed over same-component subset pairs."""
    from lvngraph.graph import connected_components

    comp = connected_components(g)
    pinv = np.linalg.pinv(dense_laplacian(g))
    total = 0.0
    members = list(members)
    for a_pos in range(len(members)):
        for b_pos in range(a_pos + 1, len(members)):
            u, v = members[a_pos], members[b_pos]
            if comp[u] != comp[v]:
                continue
            e = np.zeros(g.num_nodes)
            e[u], e[v] = 1.0, -1.0
            total += float(e @ pinv @ e)
    return total


def oracle_walk_sum(adjacency: np.ndarray, members, r: int) -> float:
    """Ordered-pair walk count over a subset, from an explicit matrix power."""
    power = np.linalg.matrix_power(adjacency, r)
    members = np.asarray(list(members), dtype=np.int64)
    return float(power[np.ix_(members, members)].sum())


def oracle_pagerank(g: Graph, damping: float) -> np.ndarray:
    """PageRank from the closed-form linear system (I - d P^T) x = (1 - d)/N."""
    n = g.num_nodes
    p = np.zeros((n, n))
    deg = g.out_degrees()
    for v in range(n):
        if deg[v] == 0:
            p[v, :] = 1.0 / n
        else:
            p[v, g.neighbors(v)] = 1.0 / deg[v]
    return np.linalg.solve(np.eye(n) - damping * p.T, np.full(n, (1.0 - damping) / n))


def oracle_lvn_edges(g: Graph, selection: CentralSelection, n_c: int) -> set[tuple[int, int]]:
    """Literal undirected-mode edge-set construction for the clone augmentation."""
    central = set(int(v) for v in selection.members)
    kept = [v for v in range(g.num_nodes) if v not in central]
    relabel = {old: new for new, old in enumerate(kept)}
    n_surv = len(kept)

    def lvn(group: int, slot: int) -> int:
        return n_surv + group * n_c + slot

    edges: set[tuple[int, int]] = set()
    for u, v in g.edge_pairs():
        if u not in central and v not in central:
            edges.add((min(relabel[u], relabel[v]), max(relabel[u], relabel[v])))
    for origin, group in selection.index_map.items():
        for j in g.neighbors(origin):
            if int(j) in central:
                continue
            for m in range(n_c):
                a, b = relabel[int(j)], lvn(group, m)
                edges.add((min(a, b), max(a, b)))
    for i in central:
        for j in g.neighbors(i):
            if int(j) in central and i < int(j):
                gi, gj = selection.index_map[i], selection.index_map[int(j)]
                for y in range(n_c):
                    for z in range(n_c):
                        a, b = lvn(gi, y), lvn(gj, z)
                        edges.add((min(a, b), max(a, b)))
    return edges


def random_graph(rng: np.random.Generator, n: int, p: float = 0.25) -> Graph:
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return build_graph(n, pairs)


def random_connected(rng: np.random.Generator, n: int, extra: float = 0.4) -> Graph:
    edges = {(int(min(i, k)), int(max(i, k))) for i, k in ((i, rng.integers(0, i)) for i in range(1, n))}
    for _ in range(rng.poisson(extra * n)):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    return build_graph(n, sorted(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
