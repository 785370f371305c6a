"""Synthetic multi-graph tasks generated by a hidden GTN teacher."""

from dataclasses import dataclass

import numpy as np

from gtn.graphs import ring_adjacency
from gtn.harness.models import build_gsos, build_model


def geometric_adjacency(n, rng, radius=None):
    """Random geometric graph on the unit square; ring edges keep it connected."""
    pts = rng.uniform(size=(n, 2))
    if radius is None:
        radius = np.sqrt(2.0 * np.log(max(n, 2)) / n)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    a = (d < radius).astype(float)
    np.fill_diagonal(a, 0.0)
    return np.maximum(a, ring_adjacency(n))


def community_adjacency(n, rng, communities=2, p_in=0.8, p_out=0.05):
    """Stochastic block model with contiguous, near-equal blocks."""
    labels = np.arange(n) * communities // n
    p = np.where(labels[:, None] == labels[None], p_in, p_out)
    upper = np.triu(rng.uniform(size=(n, n)) < p, k=1)
    return (upper | upper.T).astype(float)


def make_adjacency(family, n, rng):
    if family == "ring":
        return ring_adjacency(n)
    if family == "geometric":
        return geometric_adjacency(n, rng)
    if family == "community":
        return community_adjacency(n, rng)
    raise ValueError(f"unknown graph family {family!r}")


@dataclass
class SyntheticData:
    train_x: np.ndarray
    train_t: np.ndarray
    test_x: np.ndarray
    test_t: np.ndarray
    adjacency: np.ndarray
    gsos: tuple
    teacher: object

    @property
    def sizes(self):
        return self.train_x.shape[1:]


def split_indices(n, fraction, rng):
    order = rng.permutation(n)
    cut = int(round(fraction * n))
    return order[:cut], order[cut:]


def synth_generate(spec, train_fraction=0.8):
    """Draw inputs, run them through a random GTN teacher, and split 80/20.

    Regression targets are the teacher outputs rescaled to unit standard
    deviation (plus Gaussian noise of std ``spec.noise``). Classification
    labels are the sign of the teacher output after its readout bias is
    shifted to put the decision boundary at the median, so classes balance.
    Everything is a function of ``spec.seed``.
    """
    rng = np.random.default_rng(spec.seed)
    sizes = (spec.time_steps, spec.nodes, spec.features)
    adjacency = make_adjacency(spec.graph, spec.nodes, rng)
    gsos = build_gsos(sizes, adjacency, spec.teacher.c)
    teacher = build_model("gtn", sizes, gsos, spec.teacher, rng)
    x = rng.standard_normal((spec.samples,) + sizes)

    # random biases so the teacher is not a trivially zero-offset model
    for layer in teacher.layers:
        if "bias" in layer.params:
            layer.params["bias"] = 0.1 * rng.standard_normal(layer.params["bias"].shape)
    readout = teacher.layers[-1]
    y = teacher.forward(x)
    scale = float(np.std(y)) or 1.0
    readout.params["W"] = readout.params["W"] / scale
    readout.params["bias"] = readout.params["bias"] / scale
    if spec.task == "classification":
        readout.params["bias"] = readout.params["bias"] - np.median(teacher.forward(x), axis=0)
        t = (teacher.forward(x) > 0).astype(float)
    else:
        t = teacher.forward(x)
        if spec.noise > 0:
            t = t + spec.noise * rng.standard_normal(t.shape)

    train, test = split_indices(spec.samples, train_fraction, rng)
    return SyntheticData(x[train], t[train], x[test], t[test], adjacency, gsos, teacher)
