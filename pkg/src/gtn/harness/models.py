"""The three model families compared on order-(2+1) data tensors.

Input samples are ``I1 x I2 x J1`` (time x vertices x features).

* ``gtn``: GTN layer (time GSO, graph GSO, ``K1 x J1`` weight) -> TT dense
  layer on ``(I1, I2, K1)`` -> flatten -> dense readout.
* ``rnn_baseline``: samples matricized along time to ``I1 x I2 J1`` -> RNN ->
  flatten -> full dense layer -> dense readout.
* ``gcn_baseline``: samples matricized along vertices to ``I2 x I1 J1`` -> GCN
  -> flatten -> full dense layer -> dense readout.
"""

from math import prod

import numpy as np

from gtn.graphs import gso_gcn, gso_time_decay
from gtn.model import (
    DenseLayer,
    Flatten,
    GTNLayer,
    Matricize,
    Model,
    RNNLayer,
    TTDenseLayer,
    glorot,
    init_tt_cores,
)


def build_gsos(sizes, adjacency, c):
    """Time-decay GSO over I1 and renormalized graph GSO over I2."""
    time_steps, nodes, _ = sizes
    if np.shape(adjacency) != (nodes, nodes):
        raise ValueError(f"adjacency must be {nodes} x {nodes}, got {np.shape(adjacency)}")
    return gso_time_decay(time_steps, c), gso_gcn(adjacency)


def _readout(rng, cfg, task, n_in):
    act = "sigmoid" if task == "classification" else "identity"
    return DenseLayer(glorot(rng, cfg.out_dim, n_in), np.zeros(cfg.out_dim), activation=act)


def build_model(family, sizes, gsos, cfg, rng, task="regression"):
    """Assemble one family's model.

    Parameters
    ----------
    family : {"gtn", "rnn_baseline", "gcn_baseline"}
    sizes : tuple of int
        ``(I1, I2, J1)``.
    gsos : tuple of GraphShiftOperator
        ``(time GSO, graph GSO)``.
    cfg : ModelConfig
    rng : numpy.random.Generator
        Drives all initialization.
    task : {"regression", "classification"}
    """
    t_steps, nodes, feats = sizes
    s_time, s_graph = gsos
    if s_time.size != t_steps or s_graph.size != nodes:
        raise ValueError("GSO sizes do not match (I1, I2)")
    n_hidden_out = prod(cfg.tt_out_dims)

    def bias(shape):
        return np.zeros(shape) if cfg.bias else None

    if family == "gtn":
        k1 = cfg.hidden
        layers = [
            GTNLayer([s_time, s_graph], [glorot(rng, k1, feats)], bias((t_steps, nodes, k1)), cfg.activation1),
            TTDenseLayer(
                init_tt_cores(rng, cfg.tt_out_dims, (t_steps, nodes, k1), cfg.rank_vector()),
                bias(cfg.tt_out_dims),
                cfg.activation2,
            ),
            Flatten(),
        ]
    elif family == "rnn_baseline":
        h = cfg.rnn_hidden or nodes * cfg.hidden
        layers = [
            Matricize(1),
            RNNLayer(0.5 * glorot(rng, h, h), glorot(rng, h, nodes * feats), bias(h), cfg.activation1),
            Flatten(),
            DenseLayer(glorot(rng, n_hidden_out, t_steps * h), bias(n_hidden_out), cfg.activation2),
        ]
    elif family == "gcn_baseline":
        g = cfg.gcn_hidden or t_steps * cfg.hidden
        layers = [
            Matricize(2),
            GTNLayer([s_graph], [glorot(rng, g, t_steps * feats)], bias(g), cfg.activation1),
            Flatten(),
            DenseLayer(glorot(rng, n_hidden_out, nodes * g), bias(n_hidden_out), cfg.activation2),
        ]
    else:
        raise ValueError(f"unknown model family {family!r}")
    layers.append(_readout(rng, cfg, task, n_hidden_out))
    return Model(layers, input_shape=sizes)


def count_params(model):
    """Total trainable entries; TT layers contribute the sum of their core sizes."""
    return model.count_params()
