"""Graph Tensor Network forward pass and the classical layers it subsumes.

A GTN layer maps a data tensor with N domain modes and M feature modes,
``X`` of shape ``I_1 x ... x I_N x J_1 x ... x J_M``, through one GSO per domain
mode and one ``K_m x J_m`` weight per feature mode:

    Y = act(X x_1 S1 ... x_N SN x_{N+1} W1 ... x_{N+M} WM + B)

Classical-API weights follow the usual right-multiplication convention
(``X W`` with ``W`` of shape ``J x K``); the GTN side stores them transposed.
"""

from dataclasses import dataclass, field

import numpy as np

from gtn.graphs import GraphShiftOperator, gso_attention, gso_circulant, gso_gcn, gso_time_decay
from gtn.tensor import ShapeError, _mode_dot, as_tensor, tucker_product
from gtn.tt import tt_apply

ACTIVATIONS = ("identity", "relu", "tanh", "sigmoid", "softmax_last_mode")


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(z, kind):
    if kind == "identity":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "softmax_last_mode":
        e = np.exp(z - np.max(z, axis=-1, keepdims=True))
        return e / np.sum(e, axis=-1, keepdims=True)
    raise ValueError(f"unknown activation {kind!r}")


def activate_backward(z, y, grad, kind):
    """Gradient w.r.t. the pre-activation ``z`` given ``y = activate(z)``."""
    if kind == "identity":
        return grad
    if kind == "relu":
        return grad * (z > 0)
    if kind == "tanh":
        return grad * (1.0 - y**2)
    if kind == "sigmoid":
        return grad * y * (1.0 - y)
    if kind == "softmax_last_mode":
        return y * (grad - np.sum(grad * y, axis=-1, keepdims=True))
    raise ValueError(f"unknown activation {kind!r}")


@dataclass(frozen=True)
class DataTensorMeta:
    """Split of a data tensor's modes into N domain modes and M feature modes."""

    domain_sizes: tuple
    feature_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "domain_sizes", tuple(int(i) for i in self.domain_sizes))
        object.__setattr__(self, "feature_sizes", tuple(int(j) for j in self.feature_sizes))
        if any(s < 1 for s in self.shape):
            raise ValueError("mode sizes must be >= 1")

    @property
    def n_domain_modes(self):
        return len(self.domain_sizes)

    @property
    def m_feature_modes(self):
        return len(self.feature_sizes)

    @property
    def shape(self):
        return self.domain_sizes + self.feature_sizes

    @classmethod
    def of(cls, x, n_domain_modes):
        shape = np.shape(x)
        return cls(shape[:n_domain_modes], shape[n_domain_modes:])


def _gso_matrix(s):
    if s is None:
        return None
    m = s.matrix if isinstance(s, GraphShiftOperator) else as_tensor(s)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"GSO must be square, got shape {m.shape}")
    return m


@dataclass
class GTNLayerSpec:
    """GSOs per domain mode (``None`` = identity), weights per feature mode, bias, activation."""

    domain_gsos: list
    feature_weights: list
    bias: np.ndarray = None
    activation: str = "identity"
    gso_matrices: list = field(init=False, repr=False)

    def __post_init__(self):
        self.gso_matrices = [_gso_matrix(s) for s in self.domain_gsos]
        self.feature_weights = [as_tensor(w) for w in self.feature_weights]
        if self.bias is not None:
            self.bias = as_tensor(self.bias)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    def output_shape(self, meta):
        return meta.domain_sizes + tuple(w.shape[0] for w in self.feature_weights)

    def factors(self):
        """``(mode, matrix)`` pairs in mode order, skipping identity GSOs."""
        mats = self.gso_matrices + self.feature_weights
        return [(k + 1, m) for k, m in enumerate(mats) if m is not None]


def check_layer(meta, layer):
    if len(layer.gso_matrices) != meta.n_domain_modes:
        raise ShapeError(f"{len(layer.gso_matrices)} GSOs for {meta.n_domain_modes} domain modes")
    if len(layer.feature_weights) != meta.m_feature_modes:
        raise ShapeError(
            f"{len(layer.feature_weights)} weights for {meta.m_feature_modes} feature modes"
        )
    for n, (s, size) in enumerate(zip(layer.gso_matrices, meta.domain_sizes)):
        if s is not None and s.shape[0] != size:
            raise ShapeError(f"GSO {n + 1} has size {s.shape[0]}, domain mode has size {size}")
    for m, (w, size) in enumerate(zip(layer.feature_weights, meta.feature_sizes)):
        if w.ndim != 2 or w.shape[1] != size:
            raise ShapeError(f"weight {m + 1} of shape {w.shape} cannot act on feature size {size}")
    if layer.bias is not None and layer.bias.shape != layer.output_shape(meta):
        raise ShapeError(f"bias shape {layer.bias.shape} != output shape {layer.output_shape(meta)}")


def gtn_forward(x, meta, layer):
    """Tucker-product forward pass of one GTN layer on a single data tensor."""
    x = as_tensor(x)
    if x.shape != meta.shape:
        raise ShapeError(f"input shape {x.shape} does not match meta shape {meta.shape}")
    check_layer(meta, layer)
    z = tucker_product(x, layer.factors())
    if layer.bias is not None:
        z = z + layer.bias
    return activate(z, layer.activation)


def tucker_batch(x, mats, offset=1):
    """Mode products on a batched tensor; ``mats[k]`` acts on axis ``offset + k``."""
    for k, m in enumerate(mats):
        if m is not None:
            x = _mode_dot(x, offset + k, m)
    return x


def dnn_forward(x, w):
    """Dense layer ``y = W x`` with ``W`` of shape ``K x J``."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 1 or w.ndim != 2 or w.shape[1] != x.shape[0]:
        raise ShapeError(f"cannot apply {w.shape} weight to vector of shape {x.shape}")
    return w @ x


def dnn_as_gtn(x, w):
    meta = DataTensorMeta((), np.shape(x))
    return gtn_forward(x, meta, GTNLayerSpec([], [w]))


def gcn_forward(x, a, w):
    """GCN layer ``S X W`` with the renormalized adjacency ``S``; ``W`` is ``J x K``."""
    x, w = as_tensor(x), as_tensor(w)
    s = gso_gcn(a).matrix
    if x.ndim != 2 or s.shape[1] != x.shape[0] or w.ndim != 2 or w.shape[0] != x.shape[1]:
        raise ShapeError(f"shapes X {x.shape}, A {s.shape}, W {w.shape} do not conform")
    return s @ x @ w


def gcn_as_gtn(x, a, w):
    w = as_tensor(w)
    meta = DataTensorMeta.of(x, 1)
    return gtn_forward(x, meta, GTNLayerSpec([gso_gcn(a)], [w.T]))


def circular_convolution(x, k):
    """``y[i] = sum_p k[p] x[(i + p) % I]`` by direct summation."""
    x, k = as_tensor(x), as_tensor(k)
    size, width = x.shape[0], k.shape[0]
    if size <= width:
        raise ValueError(f"need len(x) > len(k), got {size} and {width}")
    y = np.zeros(size)
    for p in range(width):
        y += k[p] * np.roll(x, -p)
    return y


def cnn_forward(x, k):
    """1-D circular convolution layer."""
    x = as_tensor(x)
    if x.ndim != 1:
        raise ShapeError("CNN input must be a vector")
    return circular_convolution(x, k)


def cnn_as_gtn(x, k):
    x = as_tensor(x)
    meta = DataTensorMeta(x.shape, ())
    return gtn_forward(x, meta, GTNLayerSpec([gso_circulant(k, x.shape[0])], []))


def attention_forward(x, wq, wk, wv, d_k):
    """Single-head dot-product self-attention, computed directly."""
    x, wq, wk, wv = (as_tensor(a) for a in (x, wq, wk, wv))
    if not (wq.shape == wk.shape == wv.shape and wq.shape[0] == x.shape[1]):
        raise ShapeError("Wq, Wk, Wv must all be J x K for input of J features")
    if d_k <= 0:
        raise ValueError("d_k must be positive")
    scores = (x @ wq) @ (x @ wk).T / np.sqrt(d_k)
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    return (e / e.sum(axis=1, keepdims=True)) @ (x @ wv)


def attention_as_gtn(x, wq, wk, wv, d_k):
    meta = DataTensorMeta.of(x, 1)
    s = gso_attention(x, wq, wk, d_k)
    return gtn_forward(x, meta, GTNLayerSpec([s], [as_tensor(wv).T]))


def rnn_unrolled(x, wr, wx):
    """Linear recurrence ``y_i = Wr y_{i-1} + Wx x_i`` from ``y_0 = 0``.

    ``x`` is time-major (``I x J``); the hidden states come back as rows.
    """
    x, wr, wx = as_tensor(x), as_tensor(wr), as_tensor(wx)
    k = wr.shape[0]
    if wr.shape != (k, k) or wx.shape != (k, x.shape[1]):
        raise ShapeError(f"Wr {wr.shape} and Wx {wx.shape} do not fit input {x.shape}")
    y = np.zeros((x.shape[0], k))
    prev = np.zeros(k)
    for i in range(x.shape[0]):
        prev = wr @ prev + wx @ x[i]
        y[i] = prev
    return y


def is_idempotent(w, tol=1e-10):
    w = as_tensor(w)
    return w.ndim == 2 and w.shape[0] == w.shape[1] and np.max(np.abs(w @ w - w)) < tol


def rnn_closed_form(x, w1, wx, c):
    """RNN with recurrent weight ``c * W1`` (``W1`` idempotent) as a GTN layer.

    The pre-processed input ``Xt = X Wx^T`` is shifted by the time-decay GSO and
    mixed by ``W1``, plus a skip connection: ``Y = [[Xt; S, W1]] + Xt``.
    """
    x, w1, wx = as_tensor(x), as_tensor(w1), as_tensor(wx)
    if not is_idempotent(w1):
        raise ValueError("W1 must be idempotent (W1 @ W1 == W1 within 1e-10)")
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    if wx.ndim != 2 or wx.shape[1] != x.shape[1] or wx.shape[0] != w1.shape[0]:
        raise ShapeError(f"Wx {wx.shape} does not map {x.shape[1]} features to {w1.shape[0]}")
    xt = x @ wx.T
    meta = DataTensorMeta.of(xt, 1)
    layer = GTNLayerSpec([gso_time_decay(x.shape[0], c)], [w1])
    return gtn_forward(xt, meta, layer) + xt


def tt_dense_layer(x, op, bias=None, activation="identity"):
    """``activation(tt_apply(op, x) + bias)``."""
    z = tt_apply(op, x)
    if bias is not None:
        z = z + as_tensor(bias).reshape(z.shape)
    return activate(z, activation)
