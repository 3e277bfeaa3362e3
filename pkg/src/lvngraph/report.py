"""Presentation-only rendering of result CSVs into static figure files.

Kept separate from the numeric pipeline so nothing else imports matplotlib.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _load_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    return header, np.asarray(rows, dtype=np.float64)


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_resistance(path: Path, out_path: Path) -> None:
    _, data = _load_csv(path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(data[:, 0], data[:, 1], "o-", label="transformed graph")
    ax.axhline(data[0, 2], linestyle="--", color="tab:red", label="raw graph")
    ax.fill_between(data[:, 0], data[:, 1], data[0, 2], alpha=0.15)
    ax.set_xlabel("clone groups")
    ax.set_ylabel("subset total resistance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_paths(path: Path, out_path: Path) -> None:
    _, data = _load_csv(path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(data[:, 0], data[:, 1], "s-")
    if np.all(data[:, 1] >= 0) and data[:, 1].max() > 0:
        ax.set_yscale("symlog")
    ax.set_xlabel("walk length")
    ax.set_ylabel("added walk count")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_drift(path: Path, out_path: Path) -> None:
    header, data = _load_csv(path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for col, name in enumerate(header[1:], start=1):
        ax.plot(data[:, 0], data[:, col], label=name)
    ax.set_xlabel("epoch")
    ax.set_ylabel("distance from initialization")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_similarity(path: Path, out_path: Path) -> None:
    _, data = _load_csv(path)
    matrix = data[:, 1:]
    plt = _figure()
    fig, ax = plt.subplots(figsize=(4, 3.5))
    image = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="coolwarm")
    fig.colorbar(image, ax=ax)
    ax.set_xlabel("slot")
    ax.set_ylabel("slot")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_accuracies(path: Path, out_path: Path) -> None:
    _, data = _load_csv(path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(data[:, 0], data[:, 1], "o", label="per split")
    ax.axhline(data[:, 1].mean(), linestyle="--", color="tab:green", label="mean")
    ax.set_xlabel("split")
    ax.set_ylabel("test accuracy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_probe(path: Path, out_path: Path) -> None:
    _, data = _load_csv(path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(data[:, 0], data[:, 1], "o-", label="raw features")
    ax.plot(data[:, 0], data[:, 2], "s-", label="with embeddings")
    ax.set_xlabel("split")
    ax.set_ylabel("probe accuracy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "resistance.csv": render_resistance,
    "paths.csv": render_paths,
    "drift.csv": render_drift,
    "similarity.csv": render_similarity,
    "results.csv": render_accuracies,
    "probe.csv": render_probe,
}


def render_csv_directory(input_dir, output_dir) -> list[str]:
    """Render every recognized CSV in ``input_dir``; returns the figure names."""
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, renderer in _RENDERERS.items():
        src = input_dir / name
        if not src.is_file():
            continue
        out = output_dir / (src.stem + ".png")
        renderer(src, out)
        written.append(out.name)
    return written
