"""Central finite-difference gradient checking against the analytic backward pass."""

from __future__ import annotations

import numpy as np

from lvngraph.augment import AugmentedGraph
from lvngraph.nn import (
    ModelParams,
    Tape,
    backward,
    build_shift_operator,
    cross_entropy,
    gcn_forward,
    init_features,
    readout_graph,
    readout_graph_backward,
)


def graph_loss(aug: AugmentedGraph, params: ModelParams, embed_mode, raw, label: int) -> float:
    shift = build_shift_operator(aug.graph)
    x0 = init_features(aug, params, embed_mode, raw)
    logits, _ = gcn_forward(shift, x0, params, 0.0, 0, training=False)
    loss, _ = cross_entropy(readout_graph(logits), [label])
    return loss


def graph_loss_grads(aug: AugmentedGraph, params: ModelParams, embed_mode, raw, label: int) -> ModelParams:
    shift = build_shift_operator(aug.graph)
    tape = Tape()
    x0 = init_features(aug, params, embed_mode, raw, tape)
    logits, tape = gcn_forward(shift, x0, params, 0.0, 0, training=False, tape=tape)
    _, grad_scores = cross_entropy(readout_graph(logits), [label])
    grad_logits = readout_graph_backward(grad_scores[0], aug.graph.num_nodes)
    return backward(tape, grad_logits)


def numeric_grads(loss_fn, params: ModelParams, h: float = 1e-5) -> ModelParams:
    grads = params.zeros_like()
    for (_, arr), (_, out) in zip(params.named(), grads.named()):
        flat = arr.ravel()
        flat_out = out.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn(params)
            flat[i] = orig - h
            down = loss_fn(params)
            flat[i] = orig
            flat_out[i] = (up - down) / (2.0 * h)
    return grads


def max_relative_error(analytic: ModelParams, numeric: ModelParams) -> float:
    worst = 0.0
    for (_, a), (_, b) in zip(analytic.named(), numeric.named()):
        err = np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
