"""Finite-difference gradient suite run by ``gtn check --grad``."""

import numpy as np

from gtn.graphs import ring_adjacency
from gtn.harness.config import ModelConfig
from gtn.harness.models import build_gsos, build_model
from gtn.model import (
    Activation,
    AttentionLayer,
    CirculantLayer,
    DenseLayer,
    Flatten,
    Model,
    RNNLayer,
    glorot,
)
from gtn.train import fd_check


def _randomize_biases(model, rng):
    # zero-initialized biases would leave their FD check trivially satisfied
    for layer in model.layers:
        if "bias" in layer.params:
            layer.params["bias"] = 0.1 * rng.standard_normal(layer.params["bias"].shape)


def fig8_model(rng, sizes=(6, 8, 4), cfg=None, family="gtn", task="regression"):
    cfg = cfg or ModelConfig(tt_ranks=2)
    gsos = build_gsos(sizes, ring_adjacency(sizes[1]), cfg.c)
    model = build_model(family, sizes, gsos, cfg, rng, task)
    _randomize_biases(model, rng)
    return model


def gradient_suite(seed=0, batch=4, h=1e-5, tolerance=1e-5):
    """Return ``[(label, FDReport), ...]`` covering every trainable layer type."""
    rng = np.random.default_rng(seed)
    sizes = (6, 8, 4)
    out = []
    for family in ("gtn", "rnn_baseline", "gcn_baseline"):
        model = fig8_model(rng, sizes, family=family)
        x = rng.standard_normal((batch,) + sizes)
        t = rng.standard_normal((batch, 1))
        out.append((f"fig8 {family}", fd_check(model, x, t, "mse", h, tolerance)))

    model = fig8_model(rng, sizes, task="classification")
    x = rng.standard_normal((batch,) + sizes)
    t = (rng.uniform(size=(batch, 1)) > 0.5).astype(float)
    out.append(("fig8 gtn classification", fd_check(model, x, t, "binary_cross_entropy", h, tolerance)))

    i, j, k = 5, 4, 3
    extra = {
        "attention": Model([
            AttentionLayer(glorot(rng, j, k), glorot(rng, j, k), glorot(rng, j, k), bias=0.1 * rng.standard_normal((i, k)), activation="tanh"),
            Flatten(),
            DenseLayer(glorot(rng, 2, i * k), 0.1 * rng.standard_normal(2)),
        ]),
        "circulant": Model([
            CirculantLayer(rng.standard_normal(3), 7, activation="sigmoid"),
            Flatten(),
            DenseLayer(glorot(rng, 2, 7 * j), 0.1 * rng.standard_normal(2), activation="relu"),
            Activation("softmax_last_mode"),
        ]),
        "rnn": Model([
            RNNLayer(0.5 * glorot(rng, k, k), glorot(rng, k, j), 0.1 * rng.standard_normal(k), activation="tanh"),
            Flatten(),
            DenseLayer(glorot(rng, 2, i * k), 0.1 * rng.standard_normal(2)),
        ]),
    }
    inputs = {"attention": (batch, i, j), "circulant": (batch, 7, j), "rnn": (batch, i, j)}
    for label, model in extra.items():
        x = rng.standard_normal(inputs[label])
        t = rng.standard_normal((batch, 2))
        out.append((label, fd_check(model, x, t, "mse", h, tolerance)))
    return out
