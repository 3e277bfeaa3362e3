"""Command-line pipeline: augment, analyze, train, probe, and report rendering.

Progress goes to stderr, a machine-readable JSON summary to stdout, and all
artifacts (manifest, CSVs, checkpoints, figures) under --output-dir. Exit
codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import EdgeMode, augmented_to_dict, gvn_augment, lvn_augment
from .centrality import CentralityMethod, compute_centrality, select_central
from .datasets import (
    DatasetFormatError,
    graph_from_dict,
    load_graph_json,
    load_split,
    save_split,
)
from .graph import Graph, GraphConstructionError, NodeSubset
from .harness import (
    ExperimentConfig,
    Task,
    ci95_halfwidth,
    embedding_similarity,
    load_graph_dataset,
    run_mlp_probe,
    run_training,
)
from .nn import params_from_dict, params_to_dict
from .spectral import NumericalError, path_count_delta, resistance_sweep, total_resistance_subset


class CliConfigError(ValueError):
    """Invalid flags or configuration content."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliConfigError(message)


SUBCOMMANDS = ("augment", "analyze-resistance", "analyze-paths", "train", "probe", "report")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parse_override(text: str):
    if "=" not in text:
        raise CliConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _load_config(args) -> dict:
    config = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise CliConfigError(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise CliConfigError("config must be a JSON object")
    for item in args.set or []:
        key, value = _parse_override(item)
        config[key] = value
    if args.seed is not None and args.subcommand != "report":
        config["base_seed" if args.subcommand in ("train", "probe") else "seed"] = args.seed
    return config


def _check_keys(config: dict, allowed: set[str], subcommand: str) -> None:
    unknown = set(config) - allowed
    if unknown:
        raise CliConfigError(f"unknown {subcommand} config keys: {sorted(unknown)}")


def _resolve_graph(config: dict) -> Graph:
    source = config.get("graph")
    if source is None:
        raise CliConfigError("config needs a 'graph' entry (path or inline object)")
    if isinstance(source, dict):
        return graph_from_dict(source)
    return load_graph_json(source)


def _resolve_graph_collection(config: dict) -> list[Graph]:
    if "dataset" in config:
        ds = load_graph_dataset(str(config["dataset"]))
        indices = config.get("graph_indices")
        if indices is None:
            return list(ds.graphs)
        return [ds.graphs[int(i)] for i in indices]
    return [_resolve_graph(config)]


def _write_manifest(out_dir: Path, subcommand: str, config: dict, jobs: int) -> None:
    _write_json(
        out_dir / "manifest.json",
        {"tool": "lvngraph", "version": __version__, "subcommand": subcommand, "config": config, "jobs": jobs},
    )


def _enum(config, key, enum_cls, default):
    return enum_cls(config.get(key, default))


def _cmd_augment(config: dict, out_dir: Path) -> dict:
    _check_keys(config, {"graph", "method", "n_s", "n_c", "centrality", "edge_mode", "k", "seed"}, "augment")
    g = _resolve_graph(config)
    method = config.get("method", "lvn")
    out_path = out_dir / "augmented.json"
    if method == "gvn":
        aug_graph = gvn_augment(g, int(config.get("k", 1)))
        payload = {
            "directed": False,
            "num_nodes": aug_graph.num_nodes,
            "edges": [[int(u), int(v)] for u, v in sorted(aug_graph.edge_pairs())],
            "method": "gvn",
            "k": int(config.get("k", 1)),
        }
        _write_json(out_path, payload)
        return {"num_nodes": aug_graph.num_nodes, "num_edges": aug_graph.num_edges, "output": str(out_path)}
    if method != "lvn":
        raise CliConfigError(f"unknown augment method {method!r}")
    scores = compute_centrality(g, _enum(config, "centrality", CentralityMethod, "degree"), int(config.get("seed", 0)))
    selection = select_central(scores, g, int(config.get("n_s", 1)))
    aug = lvn_augment(g, selection, int(config.get("n_c", 2)), _enum(config, "edge_mode", EdgeMode, "undirected"))
    _write_json(out_path, augmented_to_dict(aug))
    return {
        "num_nodes": aug.graph.num_nodes,
        "num_edges": aug.graph.num_edges,
        "n_s": aug.n_s,
        "n_c": aug.n_c,
        "edge_mode": aug.edge_mode.value,
        "output": str(out_path),
    }


def _cmd_analyze_resistance(config: dict, out_dir: Path) -> dict:
    _check_keys(
        config,
        {"graph", "dataset", "graph_indices", "centrality", "ns_values", "n_c", "edge_mode", "seed", "max_graphs"},
        "analyze-resistance",
    )
    graphs = _resolve_graph_collection(config)
    seed = int(config.get("seed", 0))
    method = _enum(config, "centrality", CentralityMethod, "degree")
    out_path = out_dir / "resistance.csv"
    ns_values = config.get("ns_values")
    if not ns_values:
        totals = [total_resistance_subset(g, NodeSubset(np.arange(g.num_nodes))).total for g in graphs]
        total = float(np.mean(totals))
        write_csv(out_path, ["n_s", "total_resistance", "baseline"], [[0, total, total]])
        return {"baseline": total, "output": str(out_path), "num_graphs": len(graphs)}
    n_c = int(config.get("n_c", 2))
    mode = _enum(config, "edge_mode", EdgeMode, "undirected")
    max_graphs = int(config.get("max_graphs", 25))
    min_nodes = max(int(x) for x in ns_values) + 2
    eligible = [g for g in graphs if g.num_nodes >= min_nodes][:max_graphs]
    if not eligible:
        raise DatasetFormatError(f"no graph has the {min_nodes} nodes required by the sweep")
    curves = [resistance_sweep(g, compute_centrality(g, method, seed), ns_values, n_c, mode) for g in eligible]
    totals = np.nanmean(np.vstack([c.totals for c in curves]), axis=0)
    baseline = float(np.mean([c.baseline for c in curves]))
    rows = [[int(n), float(t), baseline] for n, t in zip(sorted(set(int(x) for x in ns_values)), totals)]
    write_csv(out_path, ["n_s", "total_resistance", "baseline"], rows)
    _write_json(
        out_dir / "resistance_meta.json",
        {"num_graphs": len(eligible), "subset": "complement-of-largest-central-set", "n_c": n_c,
         "edge_mode": mode.value, "centrality": method.value},
    )
    return {"num_graphs": len(eligible), "baseline": baseline, "output": str(out_path)}


def _cmd_analyze_paths(config: dict, out_dir: Path) -> dict:
    _check_keys(
        config,
        {"graph", "dataset", "graph_indices", "centrality", "n_s", "n_c", "edge_mode", "r_max", "seed", "max_graphs"},
        "analyze-paths",
    )
    graphs = _resolve_graph_collection(config)
    seed = int(config.get("seed", 0))
    method = _enum(config, "centrality", CentralityMethod, "degree")
    n_s = int(config.get("n_s", 1))
    n_c = int(config.get("n_c", 2))
    r_max = int(config.get("r_max", 8))
    mode = _enum(config, "edge_mode", EdgeMode, "undirected")
    max_graphs = int(config.get("max_graphs", 25))
    eligible = [g for g in graphs if g.num_nodes > n_s][:max_graphs]
    if not eligible:
        raise DatasetFormatError(f"no graph has more than {n_s} nodes")
    deltas = []
    for g in eligible:
        scores = compute_centrality(g, method, seed)
        selection = select_central(scores, g, n_s)
        aug = lvn_augment(g, selection, n_c, mode)
        mask = np.ones(g.num_nodes, dtype=bool)
        mask[selection.members] = False
        curve = path_count_delta(g, aug, NodeSubset(np.flatnonzero(mask)), r_max)
        deltas.append(curve.deltas)
    mean_delta = np.mean(np.vstack(deltas), axis=0)
    out_path = out_dir / "paths.csv"
    write_csv(out_path, ["r", "delta"], [[r, float(d)] for r, d in zip(range(1, r_max + 1), mean_delta)])
    _write_json(
        out_dir / "paths_meta.json",
        {"num_graphs": len(eligible), "pairs": "ordered-including-diagonal", "n_s": n_s, "n_c": n_c,
         "edge_mode": mode.value},
    )
    return {"num_graphs": len(eligible), "output": str(out_path)}


def _cmd_train(config: dict, out_dir: Path, jobs: int) -> dict:
    exp = ExperimentConfig.from_dict(config).resolved()
    result = run_training(exp, jobs=jobs)
    _log(f"trained {exp.num_splits} splits: mean accuracy {result.mean:.4f}")
    write_csv(
        out_dir / "results.csv",
        ["split", "test_accuracy", "best_epoch"],
        [[k, float(a), int(e)] for k, (a, e) in enumerate(zip(result.accuracies, result.best_epochs))],
    )
    n_slots = result.embedding_drift.shape[1]
    write_csv(
        out_dir / "drift.csv",
        ["epoch"] + [f"slot_{i}" for i in range(n_slots)],
        [[e] + [float(x) for x in row] for e, row in enumerate(result.embedding_drift)],
    )
    sim = embedding_similarity(result.final_embedding_table)
    write_csv(
        out_dir / "similarity.csv",
        ["slot"] + [f"slot_{i}" for i in range(sim.shape[0])],
        [[i] + [float(x) for x in row] for i, row in enumerate(sim)],
    )
    splits_dir = out_dir / "splits"
    ckpt_dir = out_dir / "checkpoints"
    splits_dir.mkdir(exist_ok=True)
    ckpt_dir.mkdir(exist_ok=True)
    for k, split in enumerate(result.splits):
        save_split(split, splits_dir / f"split_{k}.json")
    for k, params in enumerate(result.split_params):
        _write_json(ckpt_dir / f"checkpoint_split{k}.json", params_to_dict(params))
    _write_json(
        out_dir / "embedding_snapshots_split0.json",
        {"tables": [[list(map(float, row)) for row in table] for table in result.embedding_snapshots]},
    )
    summary = {
        "mean_accuracy": result.mean,
        "ci95_halfwidth": result.ci95_halfwidth,
        "per_split": [float(a) for a in result.accuracies],
        "config": exp.to_dict(),
    }
    _write_json(out_dir / "results.json", summary)
    return summary


def _cmd_probe(config: dict, out_dir: Path) -> dict:
    _check_keys(config, {"run_dir", "dataset", "num_splits", "base_seed"}, "probe")
    run_dir = Path(config.get("run_dir", ""))
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetFormatError(f"no manifest.json under {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    exp = ExperimentConfig.from_dict(manifest["config"]).resolved()
    if "dataset" in config:
        exp = ExperimentConfig.from_dict({**exp.to_dict(), "dataset": str(config["dataset"])}).resolved()
    if exp.task is not Task.GRAPH:
        raise CliConfigError("the probe applies to graph-classification runs")
    dataset = load_graph_dataset(exp.dataset)
    splits, tables = [], []
    num_splits = int(config.get("num_splits", exp.num_splits))
    for k in range(num_splits):
        split_path = run_dir / "splits" / f"split_{k}.json"
        ckpt_path = run_dir / "checkpoints" / f"checkpoint_split{k}.json"
        if not split_path.is_file():
            raise DatasetFormatError(f"missing split cache {split_path}")
        splits.append(load_split(split_path))
        if ckpt_path.is_file():
            tables.append(params_from_dict(json.loads(ckpt_path.read_text())))
        else:
            tables.append(None)
    result = run_mlp_probe(dataset, splits, tables, exp)
    write_csv(
        out_dir / "probe.csv",
        ["split", "raw_accuracy", "emb_accuracy"],
        [[k, float(r), float(e)] for k, r, e in zip(result.used_splits, result.raw_accuracies, result.emb_accuracies)],
    )
    summary = {
        "raw_mean": result.raw_mean,
        "emb_mean": result.emb_mean,
        "raw_ci95": ci95_halfwidth(result.raw_accuracies),
        "emb_ci95": ci95_halfwidth(result.emb_accuracies),
        "used_splits": list(result.used_splits),
    }
    _write_json(out_dir / "probe.json", summary)
    return summary


def _cmd_report(config: dict, out_dir: Path) -> dict:
    _check_keys(config, {"input_dir"}, "report")
    input_dir = Path(config.get("input_dir", out_dir))
    if not input_dir.is_dir():
        raise DatasetFormatError(f"report input directory not found: {input_dir}")
    from .report import render_csv_directory

    written = render_csv_directory(input_dir, out_dir)
    for name in written:
        _log(f"rendered {name}")
    return {"figures": written}


def main(argv=None) -> int:
    parser = _Parser(prog="lvngraph", description="Local virtual node toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--output-dir", default="lvngraph-out", help="artifact directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel split workers")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
    try:
        args = parser.parse_args(argv)
        config = _load_config(args)
    except CliConfigError as exc:
        print(json.dumps({"status": "error", "kind": "config", "reason": str(exc)}, sort_keys=True))
        return 1
    try:
        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.subcommand == "train":
            ExperimentConfig.from_dict(config)  # validate before writing anything
        _write_manifest(out_dir, args.subcommand, config, args.jobs)
        if args.subcommand == "augment":
            summary = _cmd_augment(config, out_dir)
        elif args.subcommand == "analyze-resistance":
            summary = _cmd_analyze_resistance(config, out_dir)
        elif args.subcommand == "analyze-paths":
            summary = _cmd_analyze_paths(config, out_dir)
        elif args.subcommand == "train":
            summary = _cmd_train(config, out_dir, args.jobs)
        elif args.subcommand == "probe":
            summary = _cmd_probe(config, out_dir)
        else:
            summary = _cmd_report(config, out_dir)
    except (CliConfigError,) as exc:
        print(json.dumps({"status": "error", "kind": "config", "reason": str(exc)}, sort_keys=True))
        return 1
    except ValueError as exc:
        if isinstance(exc, (DatasetFormatError, GraphConstructionError)):
            print(json.dumps({"status": "error", "kind": "data", "reason": str(exc)}, sort_keys=True))
            return 2
        print(json.dumps({"status": "error", "kind": "config", "reason": str(exc)}, sort_keys=True))
        return 1
    except (FileNotFoundError, OSError) as exc:
        print(json.dumps({"status": "error", "kind": "data", "reason": str(exc)}, sort_keys=True))
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(json.dumps({"status": "error", "kind": "numerical", "reason": str(exc)}, sort_keys=True))
        return 3
    print(json.dumps({"status": "ok", **summary}, sort_keys=True))
    return 0


def entrypoint() -> None:
    sys.exit(main())
