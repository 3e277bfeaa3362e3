"""From-scratch differentiable core: GCN layers, shared clone embeddings, Adam.

Dense math runs on float64 numpy arrays; the normalized adjacency is a scipy
CSR matrix. Forward passes record intermediates on a tape so reverse mode is
exact, including the gradient of the embedding table shared by every clone
group in every graph of a batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .augment import AugmentedGraph
from .graph import Graph

DEBUG_NAN_CHECK = False


class EmbedMode(Enum):
    REPLACE = "replace"
    ADD = "add"


def _check_finite(name: str, arr: np.ndarray) -> None:
    if DEBUG_NAN_CHECK and not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")


@dataclass
class ModelParams:
    """All trainable tensors of the model; gradients reuse this same layout."""

    w_in: np.ndarray
    b_in: np.ndarray
    layer_weights: list[np.ndarray]
    layer_biases: list[np.ndarray]
    w_out: np.ndarray
    b_out: np.ndarray
    embedding_table: np.ndarray

    def named(self):
        yield "w_in", self.w_in
        yield "b_in", self.b_in
        for i, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            yield f"layer_{i}_w", w
            yield f"layer_{i}_b", b
        yield "w_out", self.w_out
        yield "b_out", self.b_out
        yield "embedding_table", self.embedding_table

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            np.zeros_like(self.w_in),
            np.zeros_like(self.b_in),
            [np.zeros_like(w) for w in self.layer_weights],
            [np.zeros_like(b) for b in self.layer_biases],
            np.zeros_like(self.w_out),
            np.zeros_like(self.b_out),
            np.zeros_like(self.embedding_table),
        )

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.w_in.copy(),
            self.b_in.copy(),
            [w.copy() for w in self.layer_weights],
            [b.copy() for b in self.layer_biases],
            self.w_out.copy(),
            self.b_out.copy(),
            self.embedding_table.copy(),
        )

    def add_scaled(self, other: "ModelParams", scale: float) -> None:
        for (_, mine), (_, theirs) in zip(self.named(), other.named()):
            mine += scale * theirs


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model_params(
    feature_dim: int,
    hidden_dim: int,
    num_layers: int,
    num_classes: int,
    n_c: int,
    rng,
) -> ModelParams:
    """Seeded Glorot-uniform weights, zero biases, uniform(+-sqrt(1/D)) embeddings."""
    rng = np.random.default_rng(rng)
    scale = np.sqrt(1.0 / hidden_dim)
    return ModelParams(
        w_in=_glorot(rng, feature_dim, hidden_dim),
        b_in=np.zeros(hidden_dim),
        layer_weights=[_glorot(rng, hidden_dim, hidden_dim) for _ in range(num_layers)],
        layer_biases=[np.zeros(hidden_dim) for _ in range(num_layers)],
        w_out=_glorot(rng, hidden_dim, num_classes),
        b_out=np.zeros(num_classes),
        embedding_table=rng.uniform(-scale, scale, size=(n_c, hidden_dim)),
    )


@dataclass(frozen=True)
class ShiftOperator:
    """Degree-normalized adjacency with self-loops, in CSR form.

    Entry (i, j) weights the message j -> i by
    1/sqrt((out_degree(j) + 1) * (in_degree(i) + 1)), which reduces to the
    symmetric normalization on undirected graphs.
    """

    matrix: sp.csr_matrix
    add_self_loops: bool = True

    def apply(self, h: np.ndarray) -> np.ndarray:
        return self.matrix @ h

    def apply_t(self, g: np.ndarray) -> np.ndarray:
        return self.matrix.T @ g

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_shift_operator(g: Graph) -> ShiftOperator:
    n = g.num_nodes
    d_out = g.out_degrees().astype(np.float64) + 1.0
    d_in = (g.in_degrees() if g.directed else g.out_degrees()).astype(np.float64) + 1.0
    pairs = g.arcs()
    src = np.concatenate([pairs[:, 0], np.arange(n)])
    dst = np.concatenate([pairs[:, 1], np.arange(n)])
    vals = 1.0 / np.sqrt(d_out[src] * d_in[dst])
    matrix = sp.csr_matrix((vals, (dst, src)), shape=(n, n))
    return ShiftOperator(matrix)


class Tape:
    """Recorded intermediates of one forward pass; single use."""

    def __init__(self):
        self.used = False
        self.params: ModelParams | None = None
        self.init_mode: EmbedMode | None = None
        self.n_surv = 0
        self.raw_features: np.ndarray | None = None
        self.lvn_rows: list[tuple[int, int, np.ndarray | None]] = []
        self.x0: np.ndarray | None = None
        self.shift: ShiftOperator | None = None
        self.layer_records: list[tuple[np.ndarray | None, np.ndarray, np.ndarray]] = []
        self.h_last: np.ndarray | None = None
        self.grad_x0: np.ndarray | None = None


def init_features(
    aug: AugmentedGraph,
    params: ModelParams,
    mode: EmbedMode,
    raw_features: np.ndarray,
    tape: Tape | None = None,
) -> np.ndarray:
    """Initial hidden states: projected inputs for originals, embeddings for clones.

    Replace mode assigns slot embeddings verbatim; add mode sums the embedding
    with the projected features of the replaced central node.
    """
    n_surv = aug.num_survivors
    raw_features = np.asarray(raw_features, dtype=np.float64)
    if raw_features.ndim != 2 or raw_features.shape[0] != n_surv:
        raise ValueError("raw_features must have one row per surviving original node")
    x0 = np.empty((aug.graph.num_nodes, params.w_in.shape[1]))
    x0[:n_surv] = raw_features @ params.w_in + params.b_in
    lvn_rows = []
    for rec in aug.registry:
        row = aug.lvn_id(rec.group, rec.slot)
        if mode is EmbedMode.REPLACE:
            x0[row] = params.embedding_table[rec.slot]
        else:
            if rec.origin_features is None:
                raise ValueError("add mode needs origin features; inject a constant feature first")
            x0[row] = rec.origin_features @ params.w_in + params.b_in + params.embedding_table[rec.slot]
        lvn_rows.append((row, rec.slot, rec.origin_features))
    _check_finite("x0", x0)
    if tape is not None:
        tape.init_mode = mode
        tape.n_surv = n_surv
        tape.raw_features = raw_features
        tape.lvn_rows = lvn_rows
    return x0


def gcn_forward(
    shift: ShiftOperator,
    x0: np.ndarray,
    params: ModelParams,
    dropout_p: float,
    rng_seed,
    training: bool,
    tape: Tape | None = None,
) -> tuple[np.ndarray, Tape]:
    """Hidden stack H <- relu(S H W + b) with inverted dropout between layers.

    Dropout masks hit the inputs of the second and later hidden layers only,
    and only when ``training`` is true. Returns per-node logits and the tape
    for the matching backward pass.
    """
    if x0.shape[1] != params.w_in.shape[1]:
        raise ValueError(f"x0 has width {x0.shape[1]}, expected {params.w_in.shape[1]}")
    if tape is None:
        tape = Tape()
    rng = np.random.default_rng(rng_seed) if not isinstance(rng_seed, np.random.Generator) else rng_seed
    tape.params = params
    tape.shift = shift
    tape.x0 = x0
    h = x0
    for idx, (w, b) in enumerate(zip(params.layer_weights, params.layer_biases)):
        mask = None
        if training and dropout_p > 0.0 and idx > 0:
            mask = (rng.random(h.shape) >= dropout_p) / (1.0 - dropout_p)
            h = h * mask
        m = shift.apply(h)
        z = m @ w + b
        if z.shape[1] != w.shape[1]:
            raise ValueError(f"shape mismatch in hidden layer {idx}")
        h = np.maximum(z, 0.0)
        _check_finite(f"layer_{idx}", h)
        tape.layer_records.append((mask, m, z))
    logits = h @ params.w_out + params.b_out
    _check_finite("logits", logits)
    tape.h_last = h
    return logits, tape


def readout_graph(logits: np.ndarray) -> np.ndarray:
    """Graph-level scores: column mean over all nodes, virtual ones included."""
    if logits.shape[0] == 0:
        raise ValueError("readout needs at least one node")
    return logits.mean(axis=0)


def readout_graph_backward(grad_scores: np.ndarray, num_nodes: int) -> np.ndarray:
    return np.tile(grad_scores / num_nodes, (num_nodes, 1))


def readout_node(logits: np.ndarray, aug: AugmentedGraph) -> np.ndarray:
    """Per-original-node scores; a removed central gets its group's mean row."""
    k = logits.shape[1]
    out = np.zeros((aug.num_original_nodes, k))
    survivors = aug.old_to_new >= 0
    out[survivors] = logits[aug.old_to_new[survivors]]
    for rec in aug.registry:
        out[rec.origin_node] += logits[aug.lvn_id(rec.group, rec.slot)] / aug.n_c
    return out


def readout_node_backward(grad_scores: np.ndarray, aug: AugmentedGraph, num_aug_nodes: int) -> np.ndarray:
    grad = np.zeros((num_aug_nodes, grad_scores.shape[1]))
    survivors = aug.old_to_new >= 0
    grad[aug.old_to_new[survivors]] = grad_scores[survivors]
    for rec in aug.registry:
        grad[aug.lvn_id(rec.group, rec.slot)] += grad_scores[rec.origin_node] / aug.n_c
    return grad


def cross_entropy(
    scores: np.ndarray, labels, mask=None
) -> tuple[float, np.ndarray]:
    """Mean negative log softmax over masked rows, with its exact gradient."""
    scores = np.atleast_2d(scores)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    rows = np.arange(scores.shape[0]) if mask is None else np.asarray(mask, dtype=np.int64)
    if len(rows) == 0:
        raise ValueError("cross entropy over an empty mask")
    sel = scores[rows]
    shifted = sel - sel.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(rows)), labels[rows]]
    loss = float(np.mean(log_z - picked))
    soft = np.exp(shifted)
    soft /= soft.sum(axis=1, keepdims=True)
    soft[np.arange(len(rows)), labels[rows]] -= 1.0
    grad = np.zeros_like(scores)
    grad[rows] = soft / len(rows)
    return loss, grad


def backward(tape: Tape, grad_logits: np.ndarray) -> ModelParams:
    """Exact reverse pass through the recorded forward; tapes are single-use.

    The embedding-table gradient accumulates one contribution per clone row,
    which realizes the sharing of slots across all groups.
    """
    if tape.used:
        raise ValueError("tape already consumed")
    if tape.params is None or tape.h_last is None:
        raise ValueError("tape does not record a completed forward pass")
    tape.used = True
    params = tape.params
    grads = params.zeros_like()
    grads.w_out[:] = tape.h_last.T @ grad_logits
    grads.b_out[:] = grad_logits.sum(axis=0)
    dh = grad_logits @ params.w_out.T
    for idx in range(len(tape.layer_records) - 1, -1, -1):
        mask, m, z = tape.layer_records[idx]
        dz = dh * (z > 0.0)
        grads.layer_weights[idx][:] = m.T @ dz
        grads.layer_biases[idx][:] = dz.sum(axis=0)
        dm = dz @ params.layer_weights[idx].T
        dh = tape.shift.apply_t(dm)
        if mask is not None:
            dh = dh * mask
    tape.grad_x0 = dh
    if tape.raw_features is not None:
        grads.w_in += tape.raw_features.T @ dh[: tape.n_surv]
        grads.b_in += dh[: tape.n_surv].sum(axis=0)
        for row, slot, origin_feats in tape.lvn_rows:
            grads.embedding_table[slot] += dh[row]
            if tape.init_mode is EmbedMode.ADD:
                grads.w_in += np.outer(origin_feats, dh[row])
                grads.b_in += dh[row]
    return grads


@dataclass
class AdamState:
    """First/second moment buffers mirroring the parameter layout."""

    m: ModelParams
    v: ModelParams
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam_state(params: ModelParams, lr: float) -> AdamState:
    return AdamState(m=params.zeros_like(), v=params.zeros_like(), step=0, lr=lr)


def _adam_update(p, g, m, v, step, lr, beta1, beta2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1**step)
    v_hat = v / (1.0 - beta2**step)
    p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update, applied in place."""
    state.step += 1
    for (_, p), (_, g), (_, m), (_, v) in zip(
        params.named(), grads.named(), state.m.named(), state.v.named()
    ):
        _adam_update(p, g, m, v, state.step, state.lr, state.beta1, state.beta2, state.eps)
    return params, state


def init_probe_params(in_dim: int, hidden_dim: int, num_classes: int, rng):
    rng = np.random.default_rng(rng)
    return (
        _glorot(rng, in_dim, hidden_dim),
        np.zeros(hidden_dim),
        _glorot(rng, hidden_dim, num_classes),
        np.zeros(num_classes),
    )


def mlp_probe_forward(features: np.ndarray, probe_params) -> np.ndarray:
    """Structure-free two-layer MLP per node, mean-pooled into class scores."""
    w1, b1, w2, b2 = probe_params
    z = features @ w1 + b1
    h = np.maximum(z, 0.0)
    return (h @ w2 + b2).mean(axis=0)


def mlp_probe_backward(features: np.ndarray, probe_params, grad_scores: np.ndarray):
    w1, b1, w2, b2 = probe_params
    z = features @ w1 + b1
    h = np.maximum(z, 0.0)
    n = features.shape[0]
    g_row = np.tile(grad_scores / n, (n, 1))
    gw2 = h.T @ g_row
    gb2 = g_row.sum(axis=0)
    dh = g_row @ w2.T
    dz = dh * (z > 0.0)
    gw1 = features.T @ dz
    gb1 = dz.sum(axis=0)
    return gw1, gb1, gw2, gb2


def params_to_dict(params: ModelParams) -> dict:
    """Checkpoint layout: name -> {shape, row-major float64 data}."""
    return {
        name: {"shape": list(arr.shape), "data": [float(x) for x in arr.ravel()]}
        for name, arr in params.named()
    }


def params_from_dict(payload: dict) -> ModelParams:
    def grab(name):
        entry = payload[name]
        return np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])

    num_layers = sum(1 for k in payload if k.endswith("_w") and k.startswith("layer_"))
    return ModelParams(
        w_in=grab("w_in"),
        b_in=grab("b_in"),
        layer_weights=[grab(f"layer_{i}_w") for i in range(num_layers)],
        layer_biases=[grab(f"layer_{i}_b") for i in range(num_layers)],
        w_out=grab("w_out"),
        b_out=grab("b_out"),
        embedding_table=grab("embedding_table"),
    )
