"""End-to-end experiment orchestration: training, probes, connectivity suites."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from pathlib import Path

import numpy as np

from .augment import AugmentedGraph, EdgeMode, identity_augment, lvn_augment
from .centrality import CentralityMethod, compute_centrality, select_central
from .datasets import (
    DatasetFormatError,
    GraphDataset,
    SplitSpec,
    inject_constant_feature,
    load_node_dataset,
    load_tudataset,
    make_splits,
)
from .graph import Graph, NodeSubset
from .nn import (
    AdamState,
    EmbedMode,
    ModelParams,
    Tape,
    _adam_update,
    adam_step,
    backward,
    build_shift_operator,
    cross_entropy,
    gcn_forward,
    init_adam_state,
    init_features,
    init_model_params,
    init_probe_params,
    mlp_probe_backward,
    mlp_probe_forward,
    readout_graph,
    readout_graph_backward,
    readout_node,
    readout_node_backward,
)
from .spectral import PathDeltaCurve, SweepCurve, path_count_delta, resistance_sweep
from .synthetic import make_synthetic_molecule_dataset, make_synthetic_node_graph

GRAPH_SPLIT_FRACTIONS = (0.8, 0.1, 0.1)
NODE_SPLIT_FRACTIONS = (0.6, 0.2, 0.2)

# Search matrix for the clone-group hyperparameters; the tuned pick below came
# from sweeping this grid on the bundled molecule corpus.
DEFAULT_GRAPH_GRID = {
    "n_s": [1, 2, 3, 5],
    "n_c": [2, 3, 4],
    "centrality": ["degree", "pagerank", "labelprop"],
    "edge_mode": ["undirected", "directed"],
    "embed_mode": ["replace", "add"],
}
TUNED_MOLECULE_SETTINGS = {
    "n_s": 2,
    "n_c": 2,
    "centrality": "degree",
    "edge_mode": "directed",
    "embed_mode": "replace",
}


class Task(Enum):
    GRAPH = "graph"
    NODE = "node"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: dataset, augmentation settings, architecture, optimization.

    ``hidden_dim``/``num_layers`` default per task (graph: 64 wide, 4 layers;
    node: 128 wide, 3 layers). ``n_s = 0`` disables augmentation entirely and
    trains the plain backbone.
    """

    task: Task = Task.GRAPH
    dataset: str = "synthetic-molecules"
    n_s: int = 2
    n_c: int = 2
    centrality: CentralityMethod = CentralityMethod.DEGREE
    edge_mode: EdgeMode = EdgeMode.UNDIRECTED
    embed_mode: EmbedMode = EmbedMode.REPLACE
    hidden_dim: int | None = None
    num_layers: int | None = None
    dropout: float = 0.5
    lr: float = 1e-3
    patience: int = 100
    max_epochs: int = 1000
    num_splits: int = 10
    base_seed: int = 0
    readout: str = "mean"
    labelprop_sweeps: int = 100

    def resolved(self) -> "ExperimentConfig":
        hidden = self.hidden_dim if self.hidden_dim is not None else (64 if self.task is Task.GRAPH else 128)
        layers = self.num_layers if self.num_layers is not None else (4 if self.task is Task.GRAPH else 3)
        return replace(self, hidden_dim=hidden, num_layers=layers)

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "dataset": self.dataset,
            "n_s": self.n_s,
            "n_c": self.n_c,
            "centrality": self.centrality.value,
            "edge_mode": self.edge_mode.value,
            "embed_mode": self.embed_mode.value,
            "hidden_dim": self.hidden_dim,
            "num_layers": self.num_layers,
            "dropout": self.dropout,
            "lr": self.lr,
            "patience": self.patience,
            "max_epochs": self.max_epochs,
            "num_splits": self.num_splits,
            "base_seed": self.base_seed,
            "readout": self.readout,
            "labelprop_sweeps": self.labelprop_sweeps,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {
            "task": lambda v: Task(v),
            "dataset": str,
            "n_s": int,
            "n_c": int,
            "centrality": lambda v: CentralityMethod(v),
            "edge_mode": lambda v: EdgeMode(v),
            "embed_mode": lambda v: EmbedMode(v),
            "hidden_dim": lambda v: None if v is None else int(v),
            "num_layers": lambda v: None if v is None else int(v),
            "dropout": float,
            "lr": float,
            "patience": int,
            "max_epochs": int,
            "num_splits": int,
            "base_seed": int,
            "readout": str,
            "labelprop_sweeps": int,
        }
        unknown = set(payload) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {key: known[key](value) for key, value in payload.items()}
        config = cls(**kwargs)
        if config.readout not in ("mean", "sum"):
            raise ValueError("readout must be 'mean' or 'sum'")
        return config


def iter_grid(grid: dict) -> list[dict]:
    """All combinations of a hyperparameter grid, as override dictionaries."""
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in product(*(grid[k] for k in keys))]


@dataclass(frozen=True)
class RunResult:
    """Aggregated outcome of a multi-split training run."""

    accuracies: np.ndarray
    mean: float
    ci95_halfwidth: float
    embedding_drift: np.ndarray
    final_embedding_table: np.ndarray
    splits: tuple[SplitSpec, ...]
    split_embedding_tables: tuple[np.ndarray, ...]
    best_epochs: tuple[int, ...]
    val_histories: tuple[np.ndarray, ...]
    split_params: tuple[ModelParams, ...]
    embedding_snapshots: np.ndarray


def load_graph_dataset(name: str) -> GraphDataset:
    """Resolve a graph-classification dataset name or path.

    Accepts ``synthetic-molecules[:n[:seed]]`` or a TUDataset-style directory.
    Featureless datasets get the constant feature injected.
    """
    if name.startswith("synthetic-molecules"):
        parts = name.split(":")
        n = int(parts[1]) if len(parts) > 1 else 188
        seed = int(parts[2]) if len(parts) > 2 else 7
        ds = make_synthetic_molecule_dataset(n, seed)
    else:
        ds = load_tudataset(name)
    if ds.feature_dim == 0:
        ds = inject_constant_feature(ds)
    return ds


def load_node_graph(name: str) -> Graph:
    if name.startswith("synthetic-node"):
        parts = name.split(":")
        seed = int(parts[1]) if len(parts) > 1 else 3
        return make_synthetic_node_graph(seed=seed)
    return load_node_dataset(name)


@dataclass(frozen=True)
class GraphCase:
    """One graph prepared for training: augmentation, shift operator, features."""

    aug: AugmentedGraph
    shift: object
    raw_features: np.ndarray
    label: int


def prepare_case(g: Graph, config: ExperimentConfig) -> GraphCase:
    if g.features is None:
        raise DatasetFormatError("training requires node features (inject a constant first)")
    n_s = min(config.n_s, g.num_nodes)
    if n_s == 0:
        aug = identity_augment(g)
        raw = g.features
    else:
        scores = compute_centrality(g, config.centrality, seed=config.base_seed)
        selection = select_central(scores, g, n_s)
        aug = lvn_augment(g, selection, config.n_c, config.edge_mode)
        raw = aug.graph.features[: aug.num_survivors]
    return GraphCase(aug, build_shift_operator(aug.graph), raw, int(g.graph_label or 0))


def _dropout_seed(split_seed: int, epoch: int, case_index: int) -> int:
    return ((split_seed + 1) * 1_000_003 + epoch) * 1_000_003 + case_index


def _graph_scores(case: GraphCase, params, config, training, rng_seed) -> tuple[np.ndarray, Tape]:
    tape = Tape()
    x0 = init_features(case.aug, params, config.embed_mode, case.raw_features, tape)
    logits, tape = gcn_forward(case.shift, x0, params, config.dropout, rng_seed, training, tape)
    scores = readout_graph(logits) if config.readout == "mean" else logits.sum(axis=0)
    return scores, tape


def _evaluate_graph(cases, labels, idx, params, config) -> float:
    hits = 0
    for i in idx:
        scores, _ = _graph_scores(cases[i], params, config, training=False, rng_seed=0)
        hits += int(np.argmax(scores) == labels[i])
    return hits / len(idx)


@dataclass(frozen=True)
class _SplitOutcome:
    split: SplitSpec
    test_accuracy: float
    best_epoch: int
    val_history: np.ndarray
    snapshots: np.ndarray | None
    params: ModelParams


def _train_graph_split(cases, labels, config: ExperimentConfig, split_index: int) -> _SplitOutcome:
    seed = config.base_seed ^ split_index
    split = make_splits(len(cases), GRAPH_SPLIT_FRACTIONS, seed)
    feature_dim = cases[0].raw_features.shape[1]
    num_classes = int(labels.max()) + 1
    params = init_model_params(
        feature_dim, config.hidden_dim, config.num_layers, num_classes, max(1, config.n_c), seed
    )
    state = init_adam_state(params, config.lr)
    capture = split_index == 0
    snapshots = [params.embedding_table.copy()] if capture else None
    best_val, best_params, best_epoch, since = -np.inf, params.copy(), 0, 0
    val_history = []
    n_train = len(split.train_idx)
    for epoch in range(1, config.max_epochs + 1):
        grads = params.zeros_like()
        for i in split.train_idx:
            scores, tape = _graph_scores(
                cases[i], params, config, training=True, rng_seed=_dropout_seed(seed, epoch, int(i))
            )
            _, grad_scores = cross_entropy(scores, [labels[i]])
            grad_logits = readout_graph_backward(grad_scores[0], cases[i].aug.graph.num_nodes)
            grads.add_scaled(backward(tape, grad_logits), 1.0 / n_train)
        adam_step(params, grads, state)
        if capture:
            snapshots.append(params.embedding_table.copy())
        val_acc = _evaluate_graph(cases, labels, split.val_idx, params, config)
        val_history.append(val_acc)
        if val_acc > best_val:
            best_val, best_params, best_epoch, since = val_acc, params.copy(), epoch, 0
        else:
            since += 1
        if since >= config.patience:
            break
    test_acc = _evaluate_graph(cases, labels, split.test_idx, best_params, config)
    snap_arr = np.asarray(snapshots) if capture else None
    return _SplitOutcome(split, test_acc, best_epoch, np.asarray(val_history), snap_arr, best_params)


def _evaluate_node(case: GraphCase, labels, idx, params, config) -> float:
    tape = Tape()
    x0 = init_features(case.aug, params, config.embed_mode, case.raw_features, tape)
    logits, _ = gcn_forward(case.shift, x0, params, config.dropout, 0, False, tape)
    scores = readout_node(logits, case.aug)
    return float(np.mean(np.argmax(scores[idx], axis=1) == labels[idx]))


def _train_node_split(g: Graph, case: GraphCase, config: ExperimentConfig, split_index: int) -> _SplitOutcome:
    seed = config.base_seed ^ split_index
    split = make_splits(g.num_nodes, NODE_SPLIT_FRACTIONS, seed)
    labels = g.node_labels
    num_classes = int(labels.max()) + 1
    params = init_model_params(
        g.features.shape[1], config.hidden_dim, config.num_layers, num_classes, max(1, config.n_c), seed
    )
    state = init_adam_state(params, config.lr)
    capture = split_index == 0
    snapshots = [params.embedding_table.copy()] if capture else None
    best_val, best_params, best_epoch, since = -np.inf, params.copy(), 0, 0
    val_history = []
    for epoch in range(1, config.max_epochs + 1):
        tape = Tape()
        x0 = init_features(case.aug, params, config.embed_mode, case.raw_features, tape)
        logits, tape = gcn_forward(
            case.shift, x0, params, config.dropout, _dropout_seed(seed, epoch, 0), True, tape
        )
        scores = readout_node(logits, case.aug)
        _, grad_scores = cross_entropy(scores, labels, mask=split.train_idx)
        grad_logits = readout_node_backward(grad_scores, case.aug, case.aug.graph.num_nodes)
        grads = backward(tape, grad_logits)
        adam_step(params, grads, state)
        if capture:
            snapshots.append(params.embedding_table.copy())
        val_acc = _evaluate_node(case, labels, split.val_idx, params, config)
        val_history.append(val_acc)
        if val_acc > best_val:
            best_val, best_params, best_epoch, since = val_acc, params.copy(), epoch, 0
        else:
            since += 1
        if since >= config.patience:
            break
    test_acc = _evaluate_node(case, labels, split.test_idx, best_params, config)
    snap_arr = np.asarray(snapshots) if capture else None
    return _SplitOutcome(split, test_acc, best_epoch, np.asarray(val_history), snap_arr, best_params)


def _split_worker(args) -> _SplitOutcome:
    kind, payload, config, split_index = args
    if kind == "graph":
        cases, labels = payload
        return _train_graph_split(cases, labels, config, split_index)
    g, case = payload
    return _train_node_split(g, case, config, split_index)


def run_training(config: ExperimentConfig, dataset=None, jobs: int = 1) -> RunResult:
    """Train across seeded splits with early stopping; aggregate test accuracy.

    Per split, model initialization and the split itself derive from
    ``base_seed ^ split_index``. The best-validation parameters are restored
    before the test evaluation; ties keep the earlier epoch. Embedding drift
    is captured from split 0.
    """
    config = config.resolved()
    if config.task is Task.GRAPH:
        ds = dataset if dataset is not None else load_graph_dataset(config.dataset)
        cases = [prepare_case(g, config) for g in ds.graphs]
        payload = (cases, ds.labels)
        kind = "graph"
    else:
        g = dataset if dataset is not None else load_node_graph(config.dataset)
        payload = (g, prepare_case(g, config))
        kind = "node"
    args = [(kind, payload, config, k) for k in range(config.num_splits)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_split_worker, args))
    else:
        outcomes = [_split_worker(a) for a in args]
    accs = np.asarray([o.test_accuracy for o in outcomes])
    mean = float(accs.mean())
    ci95 = ci95_halfwidth(accs)
    snapshots = outcomes[0].snapshots
    drift = track_embedding_drift(snapshots)
    return RunResult(
        accuracies=accs,
        mean=mean,
        ci95_halfwidth=ci95,
        embedding_drift=drift,
        final_embedding_table=outcomes[0].params.embedding_table.copy(),
        splits=tuple(o.split for o in outcomes),
        split_embedding_tables=tuple(o.params.embedding_table.copy() for o in outcomes),
        best_epochs=tuple(o.best_epoch for o in outcomes),
        val_histories=tuple(o.val_history for o in outcomes),
        split_params=tuple(o.params for o in outcomes),
        embedding_snapshots=snapshots,
    )


def ci95_halfwidth(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(1.96 * values.std(ddof=1) / np.sqrt(len(values)))


def track_embedding_drift(snapshots) -> np.ndarray:
    """Per-slot L2 distance from the first snapshot, one row per snapshot."""
    tables = [np.asarray(t, dtype=np.float64) for t in snapshots]
    if not tables:
        raise ValueError("need at least one snapshot")
    base = tables[0]
    return np.asarray([np.linalg.norm(t - base, axis=1) for t in tables])


def embedding_similarity(table: np.ndarray) -> np.ndarray:
    """Cosine similarity between slot embeddings; zero rows yield NaN entries."""
    table = np.asarray(table, dtype=np.float64)
    norms = np.linalg.norm(table, axis=1)
    sim = np.full((len(table), len(table)), np.nan)
    ok = norms > 0
    denom = np.outer(norms[ok], norms[ok])
    sim[np.ix_(ok, ok)] = (table[ok] @ table[ok].T) / denom
    idx = np.flatnonzero(ok)
    sim[idx, idx] = 1.0
    return sim


@dataclass(frozen=True)
class ProbeResult:
    """Paired structure-free probe accuracies: raw features vs added embeddings."""

    raw_accuracies: np.ndarray
    emb_accuracies: np.ndarray
    raw_mean: float
    emb_mean: float
    used_splits: tuple[int, ...]


def _train_probe(features_list, labels, split: SplitSpec, hidden_dim, num_classes, seed, config) -> float:
    in_dim = features_list[0].shape[1]
    probe = init_probe_params(in_dim, hidden_dim, num_classes, seed)
    moments = [[np.zeros_like(p) for p in probe], [np.zeros_like(p) for p in probe]]
    step = 0
    best_val, best_probe, since = -np.inf, tuple(p.copy() for p in probe), 0

    def scores_for(i):
        return mlp_probe_forward(features_list[i], probe)

    def accuracy(idx):
        return float(np.mean([np.argmax(scores_for(i)) == labels[i] for i in idx]))

    n_train = len(split.train_idx)
    for _ in range(1, config.max_epochs + 1):
        grads = [np.zeros_like(p) for p in probe]
        for i in split.train_idx:
            _, grad_scores = cross_entropy(scores_for(i), [labels[i]])
            for acc, g in zip(grads, mlp_probe_backward(features_list[i], probe, grad_scores[0])):
                acc += g / n_train
        step += 1
        for p, g, m, v in zip(probe, grads, moments[0], moments[1]):
            _adam_update(p, g, m, v, step, config.lr, 0.9, 0.999, 1e-8)
        val_acc = accuracy(split.val_idx)
        if val_acc > best_val:
            best_val, best_probe, since = val_acc, tuple(p.copy() for p in probe), 0
        else:
            since += 1
        if since >= config.patience:
            break
    probe = best_probe
    return accuracy(split.test_idx)


def run_mlp_probe(
    dataset: GraphDataset,
    cached_splits,
    pretrained_checkpoints,
    config: ExperimentConfig,
) -> ProbeResult:
    """Structure-free probe comparison on cached splits and their trained embeddings.

    For each cached split, trains one probe on raw node features and one on
    the initial hidden states of the clone-augmented graph built from that
    split's checkpoint (originals projected through the trained input layer,
    virtual rows initialized from the pre-trained embeddings). Splits with a
    missing checkpoint are skipped with a warning.
    """
    if dataset.feature_dim == 0:
        raise ValueError("the probe requires input node features")
    config = config.resolved()
    raw_features = [g.features for g in dataset.graphs]
    cases = [prepare_case(g, config) for g in dataset.graphs]
    raw_accs, emb_accs, used = [], [], []
    for k, split in enumerate(cached_splits):
        checkpoint = pretrained_checkpoints[k] if k < len(pretrained_checkpoints) else None
        if checkpoint is None:
            warnings.warn(f"split {k}: missing embedding checkpoint; skipping")
            continue
        seed = config.base_seed ^ k
        raw_accs.append(
            _train_probe(raw_features, dataset.labels, split, config.hidden_dim, dataset.num_classes, seed, config)
        )
        emb_features = [
            init_features(c.aug, checkpoint, config.embed_mode, c.raw_features) for c in cases
        ]
        emb_accs.append(
            _train_probe(emb_features, dataset.labels, split, config.hidden_dim, dataset.num_classes, seed, config)
        )
        used.append(k)
    raw_arr, emb_arr = np.asarray(raw_accs), np.asarray(emb_accs)
    return ProbeResult(
        raw_arr,
        emb_arr,
        float(raw_arr.mean()) if len(raw_arr) else float("nan"),
        float(emb_arr.mean()) if len(emb_arr) else float("nan"),
        tuple(used),
    )


@dataclass(frozen=True)
class ConnectivitySuiteResult:
    """Dataset-level connectivity artifacts: mean resistance sweep and walk deltas."""

    ns_values: np.ndarray
    mean_totals: np.ndarray
    mean_baseline: float
    per_graph: tuple[SweepCurve, ...]
    path_curve: PathDeltaCurve
    graph_indices: tuple[int, ...]


def run_connectivity_suite(
    dataset: GraphDataset,
    ns_values=(1, 2, 3, 5, 7, 10, 12, 15),
    n_c: int = 2,
    edge_mode: EdgeMode = EdgeMode.UNDIRECTED,
    centrality: CentralityMethod = CentralityMethod.DEGREE,
    path_n_s: int = 2,
    r_max: int = 8,
    max_graphs: int = 25,
    seed: int = 0,
) -> ConnectivitySuiteResult:
    """Resistance sweep and walk-count deltas averaged over eligible graphs.

    Only graphs with at least max(ns_values) + 2 nodes participate, so the
    probe subset (complement of the largest central set) always has pairs.
    """
    ns_values = np.asarray(sorted(set(int(x) for x in ns_values)), dtype=np.int64)
    min_nodes = int(ns_values[-1]) + 2
    eligible = [i for i, g in enumerate(dataset.graphs) if g.num_nodes >= min_nodes][:max_graphs]
    if not eligible:
        raise ValueError(f"no graph has the required {min_nodes} nodes")
    curves = []
    deltas = []
    for i in eligible:
        g = dataset.graphs[i]
        scores = compute_centrality(g, centrality, seed=seed)
        curves.append(resistance_sweep(g, scores, ns_values, n_c, edge_mode))
        selection = select_central(scores, g, min(path_n_s, g.num_nodes))
        aug = lvn_augment(g, selection, n_c, edge_mode)
        mask = np.ones(g.num_nodes, dtype=bool)
        mask[selection.members] = False
        curve = path_count_delta(g, aug, NodeSubset(np.flatnonzero(mask)), r_max)
        deltas.append(curve.deltas)
    totals = np.vstack([c.totals for c in curves])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_totals = np.nanmean(totals, axis=0)
    mean_baseline = float(np.mean([c.baseline for c in curves]))
    path_curve = PathDeltaCurve(np.arange(1, r_max + 1), np.mean(np.vstack(deltas), axis=0))
    return ConnectivitySuiteResult(
        ns_values, mean_totals, mean_baseline, tuple(curves), path_curve, tuple(eligible)
    )
