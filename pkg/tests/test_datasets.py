import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvngraph.datasets import (
    DatasetFormatError,
    GraphDataset,
    inject_constant_feature,
    load_node_dataset,
    load_split,
    load_tudataset,
    make_splits,
    save_split,
    write_tudataset,
)
from lvngraph.graph import build_graph
from lvngraph.synthetic import make_synthetic_molecule_dataset


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def tiny_tudataset(tmp_path):
    root = tmp_path / "TINY"
    root.mkdir()
    # Graph 1: triangle (nodes 1-3), label -1; graph 2: edge (nodes 4-5), label 1.
    write_lines(root / "TINY_A.txt", [
        "1, 2", "2, 1", "2, 3", "3, 2", "1, 3", "3, 1", "4, 5", "5, 4",
    ])
    write_lines(root / "TINY_graph_indicator.txt", ["1", "1", "1", "2", "2"])
    write_lines(root / "TINY_graph_labels.txt", ["-1", "1"])
    write_lines(root / "TINY_node_labels.txt", ["0", "2", "0", "1", "2"])
    return root


def test_load_tiny_tudataset(tiny_tudataset):
    ds = load_tudataset(tiny_tudataset)
    assert len(ds) == 2
    assert ds.num_classes == 2
    assert list(ds.labels) == [0, 1]
    assert ds.graphs[0].num_nodes == 3 and ds.graphs[0].num_edges == 3
    assert ds.graphs[1].num_nodes == 2 and ds.graphs[1].num_edges == 1
    # One-hot features over the 3 observed node labels.
    assert ds.feature_dim == 3
    assert np.array_equal(ds.graphs[0].features[1], [0.0, 0.0, 1.0])


def test_single_triangle_directory(tmp_path):
    root = tmp_path / "ONE"
    root.mkdir()
    write_lines(root / "ONE_A.txt", ["1, 2", "2, 1", "2, 3", "3, 2", "1, 3", "3, 1"])
    write_lines(root / "ONE_graph_indicator.txt", ["1", "1", "1"])
    write_lines(root / "ONE_graph_labels.txt", ["1"])
    ds = load_tudataset(root)
    assert len(ds) == 1 and ds.graphs[0].num_nodes == 3
    assert ds.feature_dim == 0


def test_missing_mandatory_file(tmp_path):
    root = tmp_path / "BAD"
    root.mkdir()
    write_lines(root / "BAD_A.txt", ["1, 2"])
    write_lines(root / "BAD_graph_indicator.txt", ["1", "1"])
    with pytest.raises(DatasetFormatError, match="graph_labels"):
        load_tudataset(root)


def test_edge_crossing_graphs_rejected(tmp_path):
    root = tmp_path / "XG"
    root.mkdir()
    write_lines(root / "XG_A.txt", ["1, 3", "3, 1"])
    write_lines(root / "XG_graph_indicator.txt", ["1", "1", "2"])
    write_lines(root / "XG_graph_labels.txt", ["0", "1"])
    with pytest.raises(DatasetFormatError, match="crosses"):
        load_tudataset(root)


def test_non_monotone_indicator_rejected(tmp_path):
    root = tmp_path / "NM"
    root.mkdir()
    write_lines(root / "NM_A.txt", ["1, 2", "2, 1"])
    write_lines(root / "NM_graph_indicator.txt", ["2", "1"])
    write_lines(root / "NM_graph_labels.txt", ["0", "1"])
    with pytest.raises(DatasetFormatError, match="non-decreasing"):
        load_tudataset(root)


def test_load_is_order_stable(tiny_tudataset):
    a = load_tudataset(tiny_tudataset)
    b = load_tudataset(tiny_tudataset)
    assert np.array_equal(a.labels, b.labels)
    for ga, gb in zip(a.graphs, b.graphs):
        assert np.array_equal(ga.csr_offsets, gb.csr_offsets)
        assert np.array_equal(ga.csr_targets, gb.csr_targets)
        assert np.array_equal(ga.features, gb.features)


def test_tudataset_round_trip(tmp_path):
    ds = make_synthetic_molecule_dataset(12, seed=5)
    write_tudataset(tmp_path / "SYN", ds, "SYN")
    loaded = load_tudataset(tmp_path / "SYN")
    assert len(loaded) == len(ds)
    assert np.array_equal(loaded.labels, ds.labels)
    for ga, gb in zip(loaded.graphs, ds.graphs):
        assert ga.edge_pairs() == gb.edge_pairs()
        assert np.array_equal(ga.features, gb.features)


def test_inject_constant_feature():
    g = build_graph(1, [])
    ds = GraphDataset((g,), np.array([0]), num_classes=1, feature_dim=0)
    out = inject_constant_feature(ds)
    assert out.feature_dim == 1
    assert np.array_equal(out.graphs[0].features, [[1.0]])
    with pytest.raises(DatasetFormatError):
        inject_constant_feature(out)


def test_make_splits_sizes_188():
    spec = make_splits(188, (0.8, 0.1, 0.1), seed=11)
    assert (len(spec.train_idx), len(spec.val_idx), len(spec.test_idx)) == (150, 19, 19)


def test_make_splits_sizes_10():
    spec = make_splits(10, (0.8, 0.1, 0.1), seed=1)
    assert (len(spec.train_idx), len(spec.val_idx), len(spec.test_idx)) == (8, 1, 1)


def test_make_splits_deterministic():
    a = make_splits(50, (0.6, 0.2, 0.2), seed=9)
    b = make_splits(50, (0.6, 0.2, 0.2), seed=9)
    assert np.array_equal(a.train_idx, b.train_idx)
    assert np.array_equal(a.val_idx, b.val_idx)
    assert np.array_equal(a.test_idx, b.test_idx)


def test_make_splits_rejects_tiny_and_bad_fractions():
    with pytest.raises(ValueError):
        make_splits(2, (0.8, 0.1, 0.1), seed=0)
    with pytest.raises(ValueError):
        make_splits(10, (0.6, 0.3, 0.3), seed=0)


@given(
    n=st.integers(3, 1000),
    fractions=st.sampled_from([(0.8, 0.1, 0.1), (0.6, 0.2, 0.2)]),
    seed=st.integers(0, 2**31 - 1),
)
@settings(max_examples=80, deadline=None)
def test_make_splits_is_partition(n, fractions, seed):
    spec = make_splits(n, fractions, seed)
    merged = np.concatenate([spec.train_idx, spec.val_idx, spec.test_idx])
    assert len(merged) == n
    assert np.array_equal(np.sort(merged), np.arange(n))


def test_split_cache_round_trip(tmp_path):
    spec = make_splits(30, (0.8, 0.1, 0.1), seed=4)
    save_split(spec, tmp_path / "split.json")
    loaded = load_split(tmp_path / "split.json")
    assert loaded.seed == 4
    assert np.array_equal(loaded.train_idx, spec.train_idx)
    assert np.array_equal(loaded.test_idx, spec.test_idx)
    payload = json.loads((tmp_path / "split.json").read_text())
    assert set(payload) == {"seed", "train", "val", "test"}


def test_load_node_dataset(tmp_path):
    payload = {
        "num_nodes": 2,
        "edges": [[0, 1]],
        "features": [[1.0, 0.0], [0.0, 1.0]],
        "labels": [0, 1],
    }
    (tmp_path / "toy.json").write_text(json.dumps(payload))
    g = load_node_dataset(tmp_path / "toy.json")
    assert g.num_nodes == 2 and g.num_edges == 1
    assert g.features.shape == (2, 2)
    assert list(g.node_labels) == [0, 1]


def test_load_node_dataset_malformed(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"num_nodes": 2, "edges": []}))
    with pytest.raises(DatasetFormatError):
        load_node_dataset(tmp_path / "bad.json")
    (tmp_path / "worse.json").write_text("{not json")
    with pytest.raises(DatasetFormatError):
        load_node_dataset(tmp_path / "worse.json")


REAL_MUTAG = Path(__file__).resolve().parent.parent / "data" / "MUTAG"


@pytest.mark.skipif(not REAL_MUTAG.is_dir(), reason="real MUTAG files not present under data/")
def test_real_mutag_statistics():
    ds = load_tudataset(REAL_MUTAG)
    assert len(ds) == 188
    sizes = np.array([g.num_nodes for g in ds.graphs])
    arcs = np.array([g.num_arcs for g in ds.graphs])
    assert abs(sizes.mean() - 17.93) < 0.05
    assert abs(arcs.mean() - 39.59) < 0.05


REAL_ENZYMES = Path(__file__).resolve().parent.parent / "data" / "ENZYMES"


@pytest.mark.skipif(not REAL_ENZYMES.is_dir(), reason="real ENZYMES files not present under data/")
def test_real_enzymes_count():
    assert len(load_tudataset(REAL_ENZYMES)) == 600


REAL_NODE_DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.mark.parametrize(
    "name,num_nodes,feature_dim",
    [("cornell.json", 183, 1703), ("cora.json", 2708, 1433)],
)
def test_real_node_datasets(name, num_nodes, feature_dim):
    path = REAL_NODE_DATA / name
    if not path.is_file():
        pytest.skip(f"real node dataset {name} not present under data/")
    g = load_node_dataset(path)
    assert g.num_nodes == num_nodes
    assert g.features.shape[1] == feature_dim


def test_synthetic_molecule_statistics():
    ds = make_synthetic_molecule_dataset(188, seed=7)
    assert len(ds) == 188 and ds.num_classes == 2
    sizes = np.array([g.num_nodes for g in ds.graphs])
    assert 16.5 <= sizes.mean() <= 19.5
    deg = np.concatenate([g.degrees() for g in ds.graphs])
    assert 2.0 <= deg.mean() <= 2.5
    # Deterministic regeneration.
    again = make_synthetic_molecule_dataset(188, seed=7)
    assert all(a.edge_pairs() == b.edge_pairs() for a, b in zip(ds.graphs, again.graphs))
