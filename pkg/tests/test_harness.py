import numpy as np
import pytest

from lvngraph.augment import EdgeMode
from lvngraph.centrality import CentralityMethod
from lvngraph.datasets import GraphDataset, make_splits
from lvngraph.graph import build_graph
from lvngraph.harness import (
    DEFAULT_GRAPH_GRID,
    ExperimentConfig,
    Task,
    ci95_halfwidth,
    embedding_similarity,
    iter_grid,
    load_graph_dataset,
    prepare_case,
    run_connectivity_suite,
    run_mlp_probe,
    run_training,
    track_embedding_drift,
)
from lvngraph.nn import EmbedMode
from lvngraph.synthetic import make_synthetic_molecule_dataset, make_synthetic_node_graph


def tiny_config(**overrides):
    base = dict(
        task=Task.GRAPH,
        dataset="synthetic-molecules:24:5",
        n_s=1,
        n_c=2,
        centrality=CentralityMethod.DEGREE,
        edge_mode=EdgeMode.UNDIRECTED,
        embed_mode=EmbedMode.REPLACE,
        hidden_dim=12,
        num_layers=2,
        dropout=0.5,
        lr=1e-2,
        patience=8,
        max_epochs=25,
        num_splits=2,
        base_seed=13,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def tiny_dataset():
    return load_graph_dataset("synthetic-molecules:24:5")


def test_config_defaults_mirror_tasks():
    graph_cfg = ExperimentConfig(task=Task.GRAPH).resolved()
    node_cfg = ExperimentConfig(task=Task.NODE).resolved()
    assert (graph_cfg.hidden_dim, graph_cfg.num_layers) == (64, 4)
    assert (node_cfg.hidden_dim, node_cfg.num_layers) == (128, 3)
    assert graph_cfg.dropout == 0.5 and graph_cfg.lr == 1e-3 and graph_cfg.patience == 100


def test_config_round_trip_and_unknown_keys():
    cfg = tiny_config()
    clone = ExperimentConfig.from_dict(cfg.to_dict())
    assert clone == cfg
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({"task": "graph", "bogus": 1})


def test_iter_grid_covers_product():
    combos = iter_grid(DEFAULT_GRAPH_GRID)
    expected = 1
    for v in DEFAULT_GRAPH_GRID.values():
        expected *= len(v)
    assert len(combos) == expected
    assert {c["edge_mode"] for c in combos} == {"undirected", "directed"}


def test_prepare_case_passthrough_and_cap(tiny_dataset):
    g = tiny_dataset.graphs[0]
    plain = prepare_case(g, tiny_config(n_s=0))
    assert plain.aug.n_s == 0 and plain.aug.graph.num_nodes == g.num_nodes
    capped = prepare_case(g, tiny_config(n_s=10_000))
    assert capped.aug.n_s == g.num_nodes


def test_run_training_deterministic(tiny_dataset):
    cfg = tiny_config(max_epochs=12, patience=5)
    a = run_training(cfg, dataset=tiny_dataset)
    b = run_training(cfg, dataset=tiny_dataset)
    assert np.array_equal(a.accuracies, b.accuracies)
    assert np.array_equal(a.final_embedding_table, b.final_embedding_table)
    assert np.array_equal(a.embedding_drift, b.embedding_drift)


def test_run_training_split_reproducibility(tiny_dataset):
    cfg = tiny_config()
    result = run_training(cfg, dataset=tiny_dataset)
    for k, split in enumerate(result.splits):
        expected = make_splits(len(tiny_dataset), (0.8, 0.1, 0.1), cfg.base_seed ^ k)
        assert np.array_equal(split.train_idx, expected.train_idx)
        assert np.array_equal(split.test_idx, expected.test_idx)


def test_best_epoch_is_first_val_maximum(tiny_dataset):
    result = run_training(tiny_config(), dataset=tiny_dataset)
    for best_epoch, history in zip(result.best_epochs, result.val_histories):
        assert history[best_epoch - 1] == history.max()
        assert best_epoch - 1 == int(np.argmax(history))


def test_untrained_model_runs(tiny_dataset):
    result = run_training(tiny_config(max_epochs=0), dataset=tiny_dataset)
    assert np.all((result.accuracies >= 0.0) & (result.accuracies <= 1.0))
    assert result.embedding_drift.shape[0] == 1
    assert np.all(result.embedding_drift == 0.0)


def test_drift_zero_at_start_positive_after_training(tiny_dataset):
    result = run_training(tiny_config(max_epochs=30, patience=30), dataset=tiny_dataset)
    assert np.all(result.embedding_drift[0] == 0.0)
    assert np.all(result.embedding_drift[-1] > 0.0)


def test_unused_embeddings_never_drift(tiny_dataset):
    result = run_training(tiny_config(n_s=0, max_epochs=10, patience=10), dataset=tiny_dataset)
    assert np.all(result.embedding_drift == 0.0)


def test_parallel_jobs_match_serial(tiny_dataset):
    cfg = tiny_config(max_epochs=8, patience=8)
    serial = run_training(cfg, dataset=tiny_dataset, jobs=1)
    parallel = run_training(cfg, dataset=tiny_dataset, jobs=2)
    assert np.array_equal(serial.accuracies, parallel.accuracies)


def test_node_task_end_to_end():
    g = make_synthetic_node_graph(num_nodes=60, seed=11)
    cfg = ExperimentConfig(
        task=Task.NODE,
        dataset="synthetic-node",
        n_s=3,
        n_c=2,
        hidden_dim=16,
        num_layers=2,
        lr=1e-2,
        patience=20,
        max_epochs=60,
        num_splits=2,
        base_seed=1,
    )
    result = run_training(cfg, dataset=g)
    assert len(result.accuracies) == 2
    assert result.mean > 0.5  # homophilous fixture is learnable


def test_node_task_directed_add_mode():
    g = make_synthetic_node_graph(num_nodes=50, seed=2)
    cfg = ExperimentConfig(
        task=Task.NODE,
        dataset="synthetic-node",
        n_s=2,
        n_c=2,
        edge_mode=EdgeMode.DIRECTED,
        embed_mode=EmbedMode.ADD,
        hidden_dim=12,
        num_layers=2,
        lr=1e-2,
        patience=10,
        max_epochs=25,
        num_splits=1,
        base_seed=4,
    )
    result = run_training(cfg, dataset=g)
    assert 0.0 <= result.accuracies[0] <= 1.0
    assert np.all(result.embedding_drift[-1] > 0.0)


def test_ci95_matches_reference():
    values = np.array([0.8, 0.7, 0.9, 0.75])
    expected = 1.96 * values.std(ddof=1) / np.sqrt(len(values))
    assert abs(ci95_halfwidth(values) - expected) < 1e-12
    assert ci95_halfwidth(np.array([0.5])) == 0.0


def test_track_embedding_drift_basics():
    base = np.ones((3, 4))
    assert np.all(track_embedding_drift([base]) == 0.0)
    frozen = track_embedding_drift([base, base.copy(), base.copy()])
    assert np.all(frozen == 0.0)
    moved = track_embedding_drift([base, base + [[1.0, 0, 0, 0]] * 1])
    assert np.allclose(moved[1], 1.0)


def test_embedding_similarity_properties():
    table = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 0.0]])
    sim = embedding_similarity(table)
    assert np.allclose(np.diag(sim), 1.0)
    assert sim[0, 1] == 0.0 and sim[0, 2] == -1.0
    with_zero = embedding_similarity(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert np.isnan(with_zero[0, 1]) and np.isnan(with_zero[1, 1])
    assert with_zero[0, 0] == 1.0


def probe_setup(tiny_dataset, n_splits=2):
    cfg = tiny_config(hidden_dim=8, max_epochs=10, patience=10, num_splits=n_splits)
    run = run_training(cfg, dataset=tiny_dataset)
    return cfg, run


def test_probe_runs_and_uses_cached_splits(tiny_dataset):
    cfg, run = probe_setup(tiny_dataset)
    result = run_mlp_probe(tiny_dataset, run.splits, run.split_params, cfg)
    assert result.used_splits == (0, 1)
    assert len(result.raw_accuracies) == 2 and len(result.emb_accuracies) == 2


def test_probe_skips_missing_checkpoints(tiny_dataset):
    cfg, run = probe_setup(tiny_dataset)
    checkpoints = [run.split_params[0], None]
    with pytest.warns(UserWarning, match="missing embedding checkpoint"):
        result = run_mlp_probe(tiny_dataset, run.splits, checkpoints, cfg)
    assert result.used_splits == (0,)


def test_probe_refuses_featureless():
    g = build_graph(3, [(0, 1), (1, 2)])
    ds = GraphDataset((g,), np.array([0]), num_classes=1, feature_dim=0)
    with pytest.raises(ValueError, match="features"):
        run_mlp_probe(ds, [], [], tiny_config())


def test_probe_zeroed_checkpoints_equal_uninformative_rows(tiny_dataset):
    cfg, run = probe_setup(tiny_dataset)
    zeroed = []
    for params in run.split_params:
        clone = params.copy()
        clone.embedding_table[:] = 0.0
        zeroed.append(clone)
    a = run_mlp_probe(tiny_dataset, run.splits, zeroed, cfg)
    b = run_mlp_probe(tiny_dataset, run.splits, [p.copy() for p in zeroed], cfg)
    assert np.array_equal(a.emb_accuracies, b.emb_accuracies)


def test_connectivity_suite_small():
    ds = make_synthetic_molecule_dataset(30, seed=9)
    result = run_connectivity_suite(ds, ns_values=(1, 2, 3), n_c=2, max_graphs=5, r_max=8)
    assert len(result.graph_indices) == 5
    assert np.all(np.diff(result.mean_totals) <= 1e-9)
    assert result.mean_totals[0] <= result.mean_baseline + 1e-9
    assert np.all(result.path_curve.deltas >= 0.0)
    # Added clone pathways compound with walk length.
    assert result.path_curve.deltas[-1] > result.path_curve.deltas[1] > 0.0


def test_connectivity_suite_single_clone_identity():
    ds = make_synthetic_molecule_dataset(20, seed=9)
    result = run_connectivity_suite(ds, ns_values=(1, 2), n_c=1, path_n_s=1, max_graphs=4, r_max=5)
    assert np.allclose(result.path_curve.deltas, 0.0)


def test_connectivity_suite_needs_big_enough_graphs():
    ds = make_synthetic_molecule_dataset(10, seed=9)
    with pytest.raises(ValueError, match="nodes"):
        run_connectivity_suite(ds, ns_values=(100,), max_graphs=3)
