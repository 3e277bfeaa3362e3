"""Centrality scoring and selection of the central nodes that seed clone groups."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import Graph


class CentralityMethod(Enum):
    DEGREE = "degree"
    PAGERANK = "pagerank"
    LABELPROP = "labelprop"


@dataclass(frozen=True)
class CentralityScores:
    """Per-node scores; label-propagation scoring also keeps the community map."""

    method: CentralityMethod
    scores: np.ndarray
    communities: np.ndarray | None = None
    converged: bool = True

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if not np.all(np.isfinite(scores)):
            raise ValueError("centrality scores must be finite")


@dataclass(frozen=True)
class CentralSelection:
    """The selected central nodes and their rank order.

    ``index_map`` maps each selected node to its group index (0 = highest
    score); ``members`` lists the same nodes sorted by node id.
    """

    members: np.ndarray
    n_s: int
    index_map: dict[int, int]

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.int64)
        object.__setattr__(self, "members", members)
        if len(members) != self.n_s or set(self.index_map) != {int(v) for v in members}:
            raise ValueError("index_map must cover exactly the selected members")
        if sorted(self.index_map.values()) != list(range(self.n_s)):
            raise ValueError("index_map must be a bijection onto 0..n_s-1")

    @classmethod
    def from_ranked(cls, ranked_nodes) -> "CentralSelection":
        ranked = [int(v) for v in ranked_nodes]
        return cls(np.sort(np.asarray(ranked, dtype=np.int64)), len(ranked), {v: i for i, v in enumerate(ranked)})

    def truncated(self, n_s: int) -> "CentralSelection":
        """Selection of the top-``n_s`` ranks out of this one (same rank order)."""
        if n_s > self.n_s:
            raise ValueError("cannot truncate to a larger selection")
        ranked = sorted(self.index_map, key=self.index_map.get)[:n_s]
        return CentralSelection.from_ranked(ranked)


def degree_centrality(g: Graph) -> CentralityScores:
    """Score each node by its neighbor count."""
    return CentralityScores(CentralityMethod.DEGREE, g.degrees().astype(np.float64))


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-8, max_iter: int = 200) -> CentralityScores:
    """Power iteration with uniform teleport; dangling mass is spread uniformly.

    Stops when the L1 change drops below ``tol``; hitting ``max_iter`` returns
    the last iterate with ``converged=False``.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    n = g.num_nodes
    if n == 0:
        return CentralityScores(CentralityMethod.PAGERANK, np.zeros(0))
    out_deg = g.out_degrees().astype(np.float64)
    src = np.repeat(np.arange(n, dtype=np.int64), g.out_degrees())
    dst = g.csr_targets
    dangling = out_deg == 0
    x = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        share = np.divide(x, out_deg, out=np.zeros_like(x), where=~dangling)
        nxt = np.bincount(dst, weights=share[src], minlength=n)
        nxt = (1.0 - damping) / n + damping * (nxt + x[dangling].sum() / n)
        if np.abs(nxt - x).sum() < tol:
            x = nxt
            converged = True
            break
        x = nxt
    return CentralityScores(CentralityMethod.PAGERANK, x, converged=converged)


def labelprop_select(g: Graph, seed: int, max_sweeps: int = 100) -> CentralityScores:
    """Asynchronous label propagation, then out-community degree as the score.

    Each sweep visits nodes in a freshly seeded shuffle; a node adopts the
    majority label of its neighborhood with ties broken toward the smallest
    label. The sweep loop stops when a full sweep changes nothing. The score
    of a node is its number of neighbors in a different community.
    """
    n = g.num_nodes
    labels = np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    converged = n == 0
    for _ in range(max_sweeps):
        changed = False
        for v in rng.permutation(n):
            nbrs = g.neighbors(v)
            if len(nbrs) == 0:
                continue
            counts = np.bincount(labels[nbrs])
            best = int(np.argmax(counts))
            if best != labels[v]:
                labels[v] = best
                changed = True
        if not changed:
            converged = True
            break
    scores = np.zeros(n)
    for v in range(n):
        nbrs = g.neighbors(v)
        scores[v] = np.count_nonzero(labels[nbrs] != labels[v])
    return CentralityScores(CentralityMethod.LABELPROP, scores, communities=labels, converged=converged)


def compute_centrality(g: Graph, method: CentralityMethod, seed: int = 0) -> CentralityScores:
    if method is CentralityMethod.DEGREE:
        return degree_centrality(g)
    if method is CentralityMethod.PAGERANK:
        return pagerank(g)
    return labelprop_select(g, seed=seed)


def _ranked_by_score(scores: np.ndarray, candidates: np.ndarray) -> list[int]:
    # Descending score, ties toward the smaller node id.
    order = np.lexsort((candidates, -scores[candidates]))
    return [int(candidates[i]) for i in order]


def select_central(scores: CentralityScores, g: Graph, n_s: int) -> CentralSelection:
    """Pick the ``n_s`` central nodes from a score vector.

    Degree/PageRank: global top-``n_s``. Label propagation: one candidate per
    community (its highest out-community degree node), candidates ranked by
    score and truncated to ``n_s``; a community shortfall is filled from the
    global ranking. All ties break toward the smaller node id, and group
    indices follow descending score order.
    """
    if not 1 <= n_s <= g.num_nodes:
        raise ValueError(f"n_s must lie in [1, {g.num_nodes}], got {n_s}")
    everyone = np.arange(g.num_nodes, dtype=np.int64)
    if scores.method is not CentralityMethod.LABELPROP:
        return CentralSelection.from_ranked(_ranked_by_score(scores.scores, everyone)[:n_s])
    if scores.communities is None:
        raise ValueError("label-propagation selection requires community assignments")
    winners = []
    for label in np.unique(scores.communities):
        members = np.flatnonzero(scores.communities == label)
        winners.append(_ranked_by_score(scores.scores, members)[0])
    ranked = _ranked_by_score(scores.scores, np.asarray(winners, dtype=np.int64))[:n_s]
    if len(ranked) < n_s:
        rest = np.setdiff1d(everyone, np.asarray(ranked, dtype=np.int64))
        ranked += _ranked_by_score(scores.scores, rest)[: n_s - len(ranked)]
    return CentralSelection.from_ranked(ranked)
