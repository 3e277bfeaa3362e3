"""Clone-group graph augmentation: local virtual nodes and the global-node baseline."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .centrality import CentralSelection
from .graph import Graph, arcs_to_graph, build_graph


class EdgeMode(Enum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"


@dataclass(frozen=True)
class VirtualNodeRecord:
    """One virtual node: its group, slot within the group, and the node it replaces."""

    group: int
    slot: int
    origin_node: int
    origin_features: np.ndarray | None


@dataclass(frozen=True)
class AugmentedGraph:
    """A graph whose central nodes were replaced by groups of virtual clones.

    Virtual nodes are appended after the surviving originals: the clone of
    group ``g`` at slot ``m`` has id ``num_survivors + g * n_c + m``.
    ``old_to_new`` maps original ids to relabeled ids (-1 for removed
    centrals). ``isolated_groups`` flags groups whose origin had no neighbors.
    """

    graph: Graph
    registry: tuple[VirtualNodeRecord, ...]
    n_c: int
    n_s: int
    edge_mode: EdgeMode
    old_to_new: np.ndarray
    isolated_groups: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "registry", tuple(self.registry))
        object.__setattr__(self, "old_to_new", np.asarray(self.old_to_new, dtype=np.int64))
        if len(self.registry) != self.n_s * self.n_c:
            raise ValueError("registry must hold exactly n_s * n_c records")
        if np.count_nonzero(self.old_to_new < 0) != self.n_s:
            raise ValueError("old_to_new must drop exactly the n_s central nodes")

    @property
    def num_original_nodes(self) -> int:
        return int(len(self.old_to_new))

    @property
    def num_survivors(self) -> int:
        return self.num_original_nodes - self.n_s

    def lvn_id(self, group: int, slot: int) -> int:
        return self.num_survivors + group * self.n_c + slot


def identity_augment(g: Graph) -> AugmentedGraph:
    """Pass-through wrapper for the unaugmented baseline pipeline."""
    return AugmentedGraph(
        graph=g,
        registry=(),
        n_c=0,
        n_s=0,
        edge_mode=EdgeMode.UNDIRECTED,
        old_to_new=np.arange(g.num_nodes, dtype=np.int64),
    )


def lvn_augment(g: Graph, selection: CentralSelection, n_c: int, mode: EdgeMode) -> AugmentedGraph:
    """Replace each selected central node with a group of ``n_c`` virtual clones.

    Every clone inherits edges to the origin's surviving neighbors: in
    undirected mode as plain edges, in directed mode as in-edges from all
    neighbors plus out-edges to a round-robin partition of the id-sorted
    neighbors (so each neighbor hears back from exactly one clone). Groups of
    adjacent centrals are fully interconnected. The centrals themselves are
    removed and survivors are relabeled in ascending original order.
    """
    if n_c < 1:
        raise ValueError("n_c must be at least 1")
    if g.directed:
        raise ValueError("augmentation expects an undirected input graph")
    if len(selection.members) and selection.members[-1] >= g.num_nodes:
        raise ValueError("selection refers to a node beyond the graph")
    n = g.num_nodes
    n_s = selection.n_s
    central = np.zeros(n, dtype=bool)
    central[selection.members] = True
    old_to_new = np.full(n, -1, dtype=np.int64)
    kept = np.flatnonzero(~central)
    old_to_new[kept] = np.arange(len(kept), dtype=np.int64)
    n_surv = len(kept)
    num_aug = n_surv + n_s * n_c

    def lvn(group: int, slot: int) -> int:
        return n_surv + group * n_c + slot

    arcs: list[tuple[int, int]] = []
    base = g.arcs()
    alive = ~central[base[:, 0]] & ~central[base[:, 1]]
    for u, v in base[alive]:
        arcs.append((int(old_to_new[u]), int(old_to_new[v])))

    isolated = []
    for origin, group in selection.index_map.items():
        nbrs = g.neighbors(origin)
        if len(nbrs) == 0:
            isolated.append(group)
            continue
        surviving = [int(old_to_new[j]) for j in nbrs if not central[j]]
        for m in range(n_c):
            node = lvn(group, m)
            for j in surviving:
                arcs.append((j, node))
                if mode is EdgeMode.UNDIRECTED:
                    arcs.append((node, j))
        if mode is EdgeMode.DIRECTED:
            for k, j in enumerate(surviving):
                arcs.append((lvn(group, k % n_c), j))

    members = selection.members
    for a_pos in range(len(members)):
        for b_pos in range(a_pos + 1, len(members)):
            i, j = int(members[a_pos]), int(members[b_pos])
            if j not in g.neighbors(i):
                continue
            gi, gj = selection.index_map[i], selection.index_map[j]
            for y in range(n_c):
                for z in range(n_c):
                    arcs.append((lvn(gi, y), lvn(gj, z)))
                    arcs.append((lvn(gj, z), lvn(gi, y)))

    features = None
    if g.features is not None:
        features = np.vstack(
            [g.features[kept], np.zeros((n_s * n_c, g.features.shape[1]), dtype=np.float64)]
        )

    graph = arcs_to_graph(num_aug, arcs, directed=(mode is EdgeMode.DIRECTED), features=features,
                          graph_label=g.graph_label)

    registry = []
    by_group = sorted(selection.index_map.items(), key=lambda kv: kv[1])
    for origin, group in by_group:
        origin_feats = None if g.features is None else g.features[origin].copy()
        for m in range(n_c):
            registry.append(VirtualNodeRecord(group, m, int(origin), origin_feats))

    return AugmentedGraph(
        graph=graph,
        registry=tuple(registry),
        n_c=n_c,
        n_s=n_s,
        edge_mode=mode,
        old_to_new=old_to_new,
        isolated_groups=tuple(sorted(isolated)),
    )


def gvn_augment(g: Graph, k: int) -> Graph:
    """Add ``k`` global virtual nodes, each tied to every original node."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if g.directed:
        raise ValueError("global virtual nodes expect an undirected input graph")
    n = g.num_nodes
    pairs = [tuple(p) for p in g.arcs() if p[0] < p[1]]
    pairs += [(v, n + m) for m in range(k) for v in range(n)]
    features = None
    if g.features is not None:
        features = np.vstack([g.features, np.zeros((k, g.features.shape[1]), dtype=np.float64)])
    return build_graph(n + k, pairs, directed=False, features=features, graph_label=g.graph_label)


def readout_groups(aug: AugmentedGraph) -> dict[int, np.ndarray]:
    """Relabeled virtual-node ids per group, slot-ordered."""
    base = aug.num_survivors
    return {
        group: base + group * aug.n_c + np.arange(aug.n_c, dtype=np.int64)
        for group in range(aug.n_s)
    }


def augmented_to_dict(aug: AugmentedGraph) -> dict:
    """JSON-ready description of an augmented graph (edges carry a direction flag)."""
    g = aug.graph
    pairs = g.arcs()
    if not g.directed:
        pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    payload = {
        "directed": g.directed,
        "num_nodes": g.num_nodes,
        "edges": [[int(u), int(v)] for u, v in pairs],
        "edge_mode": aug.edge_mode.value,
        "n_s": aug.n_s,
        "n_c": aug.n_c,
        "old_to_new": [int(x) for x in aug.old_to_new],
        "isolated_groups": [int(x) for x in aug.isolated_groups],
        "registry": [
            {
                "group": r.group,
                "slot": r.slot,
                "origin_node": r.origin_node,
                "origin_features": None if r.origin_features is None else [float(x) for x in r.origin_features],
            }
            for r in aug.registry
        ],
    }
    if g.features is not None:
        payload["features"] = [[float(x) for x in row] for row in g.features]
    return payload


def augmented_from_dict(payload: dict) -> AugmentedGraph:
    directed = bool(payload["directed"])
    features = None
    if payload.get("features") is not None:
        features = np.asarray(payload["features"], dtype=np.float64)
    graph = build_graph(int(payload["num_nodes"]), payload["edges"], directed=directed, features=features)
    registry = tuple(
        VirtualNodeRecord(
            int(r["group"]),
            int(r["slot"]),
            int(r["origin_node"]),
            None if r.get("origin_features") is None else np.asarray(r["origin_features"], dtype=np.float64),
        )
        for r in payload["registry"]
    )
    return AugmentedGraph(
        graph=graph,
        registry=registry,
        n_c=int(payload["n_c"]),
        n_s=int(payload["n_s"]),
        edge_mode=EdgeMode(payload["edge_mode"]),
        old_to_new=np.asarray(payload["old_to_new"], dtype=np.int64),
        isolated_groups=tuple(int(x) for x in payload.get("isolated_groups", ())),
    )
