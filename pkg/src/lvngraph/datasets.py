"""Benchmark dataset parsing, constant-feature injection, and reproducible splits."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, build_graph


class DatasetFormatError(ValueError):
    """Raised when a dataset file is missing, malformed, or internally inconsistent."""


@dataclass(frozen=True)
class GraphDataset:
    """A labeled collection of graphs sharing one feature space."""

    graphs: tuple[Graph, ...]
    labels: np.ndarray
    num_classes: int
    feature_dim: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if len(self.graphs) != len(labels):
            raise DatasetFormatError("one label per graph is required")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise DatasetFormatError("labels must lie in [0, num_classes)")

    def __len__(self) -> int:
        return len(self.graphs)


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/val/test index arrays covering one dataset."""

    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train_idx", "val_idx", "test_idx"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))

    @property
    def n_items(self) -> int:
        return len(self.train_idx) + len(self.val_idx) + len(self.test_idx)


def load_tudataset(dir_path) -> GraphDataset:
    """Parse a TUDataset-style flat-file directory into a GraphDataset.

    Expects ``<DS>_A.txt`` (1-based comma-separated edge pairs),
    ``<DS>_graph_indicator.txt``, ``<DS>_graph_labels.txt`` and optionally
    ``<DS>_node_labels.txt``. Node labels become one-hot features; graph
    labels are remapped to a dense 0-based range; duplicate edge directions
    are merged into undirected graphs.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise DatasetFormatError(f"dataset directory not found: {root}")
    adj_files = sorted(root.glob("*_A.txt"))
    if not adj_files:
        raise DatasetFormatError(f"no <DS>_A.txt file under {root}")
    prefix = adj_files[0].name[: -len("_A.txt")]

    def read_rows(name: str, required: bool) -> list[list[int]] | None:
        path = root / f"{prefix}_{name}.txt"
        if not path.is_file():
            if required:
                raise DatasetFormatError(f"missing mandatory file: {path}")
            return None
        rows = []
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([int(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
        return rows

    edges = np.asarray(read_rows("A", required=True), dtype=np.int64).reshape(-1, 2)
    indicator = np.asarray([r[0] for r in read_rows("graph_indicator", required=True)], dtype=np.int64)
    graph_labels_raw = np.asarray([r[0] for r in read_rows("graph_labels", required=True)], dtype=np.int64)
    node_label_rows = read_rows("node_labels", required=False)

    if np.any(np.diff(indicator) < 0):
        raise DatasetFormatError("graph_indicator must be non-decreasing")
    num_graphs = len(graph_labels_raw)
    if indicator.min(initial=1) < 1 or indicator.max(initial=1) > num_graphs:
        raise DatasetFormatError("graph_indicator refers to an unknown graph id")

    num_nodes_total = len(indicator)
    if len(edges) and (edges.min() < 1 or edges.max() > num_nodes_total):
        raise DatasetFormatError("edge endpoint outside the global node range")

    node_graph = indicator - 1
    first_node = np.zeros(num_graphs, dtype=np.int64)
    counts = np.bincount(node_graph, minlength=num_graphs)
    np.cumsum(counts[:-1], out=first_node[1:])

    features = None
    if node_label_rows is not None:
        raw = np.asarray([r[0] for r in node_label_rows], dtype=np.int64)
        if len(raw) != num_nodes_total:
            raise DatasetFormatError("node_labels must have one row per node")
        vocab = np.unique(raw)
        features = np.zeros((num_nodes_total, len(vocab)), dtype=np.float64)
        features[np.arange(num_nodes_total), np.searchsorted(vocab, raw)] = 1.0

    per_graph_edges: list[list[tuple[int, int]]] = [[] for _ in range(num_graphs)]
    for u1, v1 in edges:
        u, v = int(u1) - 1, int(v1) - 1
        gu, gv = node_graph[u], node_graph[v]
        if gu != gv:
            raise DatasetFormatError(f"edge ({u1}, {v1}) crosses graph boundaries")
        base = first_node[gu]
        per_graph_edges[gu].append((u - base, v - base))

    label_vocab = np.unique(graph_labels_raw)
    labels = np.searchsorted(label_vocab, graph_labels_raw).astype(np.int64)

    graphs = []
    for gi in range(num_graphs):
        n = int(counts[gi])
        if n == 0:
            raise DatasetFormatError(f"graph {gi} has no nodes")
        lo = first_node[gi]
        feats = None if features is None else features[lo : lo + n]
        graphs.append(
            build_graph(n, per_graph_edges[gi], directed=False, features=feats, graph_label=int(labels[gi]))
        )

    feature_dim = 0 if features is None else features.shape[1]
    return GraphDataset(tuple(graphs), labels, num_classes=len(label_vocab), feature_dim=feature_dim)


def write_tudataset(dir_path, ds: GraphDataset, name: str) -> None:
    """Write a GraphDataset back out in the TUDataset flat-file layout."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    a_lines, ind_lines, node_label_lines = [], [], []
    offset = 1
    has_onehot = ds.feature_dim > 0 and all(
        g.features is not None and np.all(np.isin(g.features, (0.0, 1.0))) for g in ds.graphs
    )
    for gi, g in enumerate(ds.graphs, start=1):
        for u, v in sorted(g.edge_pairs()):
            a_lines.append(f"{u + offset}, {v + offset}")
            a_lines.append(f"{v + offset}, {u + offset}")
        ind_lines.extend([str(gi)] * g.num_nodes)
        if has_onehot:
            node_label_lines.extend(str(int(np.argmax(row))) for row in g.features)
        offset += g.num_nodes
    (root / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (root / f"{name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (root / f"{name}_graph_labels.txt").write_text("\n".join(str(int(x)) for x in ds.labels) + "\n")
    if node_label_lines:
        (root / f"{name}_node_labels.txt").write_text("\n".join(node_label_lines) + "\n")


def inject_constant_feature(ds: GraphDataset) -> GraphDataset:
    """Give every node the single constant feature 1.0; only valid on featureless data."""
    if ds.feature_dim != 0:
        raise DatasetFormatError("dataset already has node features")
    graphs = tuple(g.with_features(np.ones((g.num_nodes, 1), dtype=np.float64)) for g in ds.graphs)
    return GraphDataset(graphs, ds.labels, ds.num_classes, feature_dim=1)


def make_splits(n_items: int, fractions: tuple[float, float, float], seed: int) -> SplitSpec:
    """Shuffle items with a seeded generator and cut train/val/test index sets.

    Test and validation sizes are round(frac * n); train takes the remainder,
    which keeps the evaluation sets non-empty at small n for the standard
    80/10/10 and 60/20/20 settings.
    """
    if n_items < 3:
        raise ValueError("need at least 3 items to split")
    train_frac, val_frac, test_frac = fractions
    if abs(train_frac + val_frac + test_frac - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_items)
    n_test = round(test_frac * n_items)
    n_val = round(val_frac * n_items)
    test = np.sort(perm[:n_test])
    val = np.sort(perm[n_test : n_test + n_val])
    train = np.sort(perm[n_test + n_val :])
    return SplitSpec(train, val, test, seed=seed)


def save_split(spec: SplitSpec, path) -> None:
    payload = {
        "seed": int(spec.seed),
        "train": [int(i) for i in spec.train_idx],
        "val": [int(i) for i in spec.val_idx],
        "test": [int(i) for i in spec.test_idx],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=None, separators=(",", ":")))


def load_split(path) -> SplitSpec:
    try:
        payload = json.loads(Path(path).read_text())
        return SplitSpec(
            np.asarray(payload["train"], dtype=np.int64),
            np.asarray(payload["val"], dtype=np.int64),
            np.asarray(payload["test"], dtype=np.int64),
            seed=int(payload["seed"]),
        )
    except (KeyError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"malformed split cache {path}: {exc}") from exc


def graph_from_dict(payload: dict, require_labels: bool = False, source: str = "<dict>") -> Graph:
    """Build a graph from the JSON layout; features and labels are optional."""
    try:
        num_nodes = int(payload["num_nodes"])
        edges = [(int(u), int(v)) for u, v in payload["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"malformed graph {source}: {exc}") from exc
    features = labels = None
    if payload.get("features") is not None:
        features = np.asarray(payload["features"], dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != num_nodes:
            raise DatasetFormatError(f"graph {source} has a malformed feature matrix")
    if payload.get("labels") is not None:
        labels = np.asarray(payload["labels"], dtype=np.int64)
        if labels.shape != (num_nodes,):
            raise DatasetFormatError(f"graph {source} needs one label per node")
    if require_labels and (features is None or labels is None):
        raise DatasetFormatError(f"graph {source} must carry both features and labels")
    try:
        return build_graph(num_nodes, edges, directed=False, features=features, node_labels=labels)
    except ValueError as exc:
        raise DatasetFormatError(f"graph {source}: {exc}") from exc


def load_graph_json(path) -> Graph:
    """Load a plain graph fixture from JSON (features/labels optional)."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read graph {path}: {exc}") from exc
    return graph_from_dict(payload, source=str(path))


def load_node_dataset(path) -> Graph:
    """Load a single node-classification graph from the documented JSON layout.

    The layout is ``{"num_nodes": int, "edges": [[i, j], ...],
    "features": [[...], ...], "labels": [...]}`` with 0-based node ids.
    """
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read node dataset {path}: {exc}") from exc
    return graph_from_dict(payload, require_labels=True, source=str(path))
