"""Trainable layers with hand-written adjoints, and the sequential model.

Every layer works on a batch: axis 0 indexes samples. ``forward`` caches what
``backward`` needs; ``backward`` returns the input gradient and fills
``layer.grads`` with one array per entry of ``layer.params``.
"""

from math import prod
import string

import numpy as np

from gtn.graphs import GraphShiftOperator, softmax
from gtn.network import activate, activate_backward, tucker_batch, ACTIVATIONS
from gtn.tensor import ShapeError, _mode_dot, _unfold, dematricize, matricize
from gtn.tt import TTOperator, _tt_apply_batch, convolution_tensor, tt_reconstruct


class MissingCacheError(RuntimeError):
    """``backward`` was called without a preceding ``forward``."""


def glorot(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_tt_cores(rng, out_dims, in_dims, ranks):
    """Gaussian cores rescaled so the assembled matrix has spectral norm 1."""
    ranks = list(ranks)
    cores = [
        rng.standard_normal((ranks[n], k, j, ranks[n + 1]))
        for n, (k, j) in enumerate(zip(out_dims, in_dims))
    ]
    norm = np.linalg.norm(tt_reconstruct(TTOperator(tuple(cores))), 2)
    if norm > 0:
        scale = norm ** (-1.0 / len(cores))
        cores = [c * scale for c in cores]
    return cores


def reduce_to(grad, shape):
    """Sum a batched gradient down to a broadcast parameter's ``shape``."""
    lead = grad.ndim - len(shape)
    g = grad.sum(axis=tuple(range(lead)))
    keep = tuple(k for k, s in enumerate(shape) if s == 1 and g.shape[k] != 1)
    return g.sum(axis=keep, keepdims=True) if keep else g


class Layer:
    name = "layer"

    def __init__(self):
        self.params = {}
        self.grads = {}
        self._cache = None

    def _take_cache(self):
        if self._cache is None:
            raise MissingCacheError(f"{self.name}: backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    def param_count(self):
        return sum(p.size for p in self.params.values())

    def output_shape(self, input_shape):
        raise NotImplementedError


class GTNLayer(Layer):
    """Tucker-product layer: fixed GSOs on domain modes, trainable feature weights."""

    name = "gtn"

    def __init__(self, gsos, weights, bias=None, activation="identity"):
        super().__init__()
        self.gsos = [
            None if s is None else (s.matrix if isinstance(s, GraphShiftOperator) else np.asarray(s, float))
            for s in gsos
        ]
        for m, w in enumerate(weights):
            self.params[f"W{m + 1}"] = np.array(w, dtype=float)
        if bias is not None:
            self.params["bias"] = np.array(bias, dtype=float)
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation

    @property
    def weights(self):
        return [self.params[f"W{m + 1}"] for m in range(len(self.params) - ("bias" in self.params))]

    def output_shape(self, input_shape):
        n = len(self.gsos)
        return tuple(input_shape[:n]) + tuple(w.shape[0] for w in self.weights)

    def forward(self, x):
        n = len(self.gsos)
        if x.ndim != 1 + n + len(self.weights):
            raise ShapeError(f"GTN layer expects order-{n + len(self.weights)} samples, got {x.shape[1:]}")
        z = tucker_batch(x, self.gsos + self.weights)
        if "bias" in self.params:
            z = z + self.params["bias"]
        y = activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def backward(self, grad):
        x, z, y = self._take_cache()
        dz = activate_backward(z, y, grad, self.activation)
        n = len(self.gsos)
        weights = self.weights
        self.grads = {}
        for m, w in enumerate(weights):
            axis = 1 + n + m
            others = self.gsos + [None if k == m else v for k, v in enumerate(weights)]
            partial = tucker_batch(x, others)
            self.grads[f"W{m + 1}"] = _unfold(dz, axis) @ _unfold(partial, axis).T
        if "bias" in self.params:
            self.grads["bias"] = reduce_to(dz, self.params["bias"].shape)
        return tucker_batch(dz, [None if s is None else s.T for s in self.gsos + weights])


class AttentionLayer(Layer):
    """Self-attention on ``(B, I, J)`` inputs: input-dependent GSO, then ``Wv``.

    ``Wq``, ``Wk`` and ``Wv`` are ``J x K`` (right-multiplied).
    """

    name = "attention"

    def __init__(self, wq, wk, wv, d_k=None, bias=None, activation="identity"):
        super().__init__()
        self.params["Wq"] = np.array(wq, dtype=float)
        self.params["Wk"] = np.array(wk, dtype=float)
        self.params["Wv"] = np.array(wv, dtype=float)
        if bias is not None:
            self.params["bias"] = np.array(bias, dtype=float)
        self.d_k = float(d_k if d_k is not None else self.params["Wk"].shape[1])
        self.activation = activation

    def output_shape(self, input_shape):
        return (input_shape[0], self.params["Wv"].shape[1])

    def forward(self, x):
        p = self.params
        scale = 1.0 / np.sqrt(self.d_k)
        q, k, v = x @ p["Wq"], x @ p["Wk"], x @ p["Wv"]
        s = softmax(q @ k.transpose(0, 2, 1) * scale, axis=-1)
        z = s @ v
        if "bias" in p:
            z = z + p["bias"]
        y = activate(z, self.activation)
        self._cache = (x, q, k, v, s, z, y)
        return y

    def backward(self, grad):
        x, q, k, v, s, z, y = self._take_cache()
        p = self.params
        scale = 1.0 / np.sqrt(self.d_k)
        dz = activate_backward(z, y, grad, self.activation)
        dv = s.transpose(0, 2, 1) @ dz
        ds = dz @ v.transpose(0, 2, 1)
        da = s * (ds - np.sum(ds * s, axis=-1, keepdims=True)) * scale
        dq = da @ k
        dk = da.transpose(0, 2, 1) @ q
        xt = x.transpose(0, 2, 1)
        self.grads = {
            "Wq": np.sum(xt @ dq, axis=0),
            "Wk": np.sum(xt @ dk, axis=0),
            "Wv": np.sum(xt @ dv, axis=0),
        }
        if "bias" in p:
            self.grads["bias"] = dz.sum(axis=0)
        return dq @ p["Wq"].T + dk @ p["Wk"].T + dv @ p["Wv"].T


class CirculantLayer(Layer):
    """Circular convolution along axis 1 with a trainable kernel."""

    name = "circulant"

    def __init__(self, kernel, size, activation="identity"):
        super().__init__()
        self.params["kernel"] = np.array(kernel, dtype=float)
        self.conv = convolution_tensor(size, self.params["kernel"].shape[0])
        self.activation = activation

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def gso(self):
        return np.tensordot(self.conv, self.params["kernel"], axes=(2, 0))

    def forward(self, x):
        s = self.gso()
        z = _mode_dot(x, 1, s)
        y = activate(z, self.activation)
        self._cache = (x, s, z, y)
        return y

    def backward(self, grad):
        x, s, z, y = self._take_cache()
        dz = activate_backward(z, y, grad, self.activation)
        ds = _unfold(dz, 1) @ _unfold(x, 1).T
        # adjoint of kernel -> circulant is a contraction with the convolution tensor
        self.grads = {"kernel": np.tensordot(self.conv, ds, axes=([0, 1], [0, 1]))}
        return _mode_dot(dz, 1, s.T)


def _tt_einsum_specs(n_cores):
    letters = iter(string.ascii_letters)
    b = next(letters)
    ks = [next(letters) for _ in range(n_cores)]
    js = [next(letters) for _ in range(n_cores)]
    rs = [next(letters) for _ in range(n_cores - 1)]
    cores = []
    for n in range(n_cores):
        left = rs[n - 1] if n > 0 else ""
        right = rs[n] if n < n_cores - 1 else ""
        cores.append(left + ks[n] + js[n] + right)
    return b + "".join(js), cores, b + "".join(ks)


_PATHS = {}


def _einsum(subscripts, *ops):
    # contraction order planned once per (subscripts, shapes)
    key = (subscripts,) + tuple(o.shape for o in ops)
    path = _PATHS.get(key)
    if path is None:
        path = np.einsum_path(subscripts, *ops, optimize="greedy")[0]
        _PATHS[key] = path
    return np.einsum(subscripts, *ops, optimize=path)


class TTDenseLayer(Layer):
    """Dense layer whose weight is held as TT cores; maps ``(B, J_1..J_N)`` to ``(B, K_1..K_N)``."""

    name = "tt_dense"

    def __init__(self, cores, bias=None, activation="identity"):
        super().__init__()
        TTOperator(tuple(cores))  # validates the chain
        for n, c in enumerate(cores):
            self.params[f"core{n + 1}"] = np.array(c, dtype=float)
        if bias is not None:
            self.params["bias"] = np.array(bias, dtype=float)
        self.n_cores = len(cores)
        self.activation = activation
        self._specs = _tt_einsum_specs(self.n_cores)

    @property
    def cores(self):
        return [self.params[f"core{n + 1}"] for n in range(self.n_cores)]

    @property
    def operator(self):
        return TTOperator(tuple(self.cores))

    @property
    def input_dims(self):
        return tuple(c.shape[2] for c in self.cores)

    @property
    def output_dims(self):
        return tuple(c.shape[1] for c in self.cores)

    def output_shape(self, input_shape):
        return self.output_dims

    def forward(self, x):
        if x.shape[1:] != self.input_dims:
            if prod(x.shape[1:]) != prod(self.input_dims):
                raise ShapeError(f"TT layer expects inputs of shape {self.input_dims}, got {x.shape[1:]}")
            x = x.reshape((x.shape[0],) + self.input_dims)
        z = _tt_apply_batch(self.cores, x)
        if "bias" in self.params:
            z = z + self.params["bias"]
        y = activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def _squeezed(self):
        out = []
        for n, c in enumerate(self.cores):
            if n == 0:
                c = c[0]
            if n == self.n_cores - 1:
                c = c[..., 0]
            out.append(c)
        return out

    def backward(self, grad):
        x, z, y = self._take_cache()
        dz = activate_backward(z, y, grad, self.activation)
        x_spec, core_specs, out_spec = self._specs
        cores = self._squeezed()
        self.grads = {}
        for n in range(self.n_cores):
            ops = [x] + [c for k, c in enumerate(cores) if k != n] + [dz]
            specs = [x_spec] + [s for k, s in enumerate(core_specs) if k != n] + [out_spec]
            g = _einsum(",".join(specs) + "->" + core_specs[n], *ops)
            self.grads[f"core{n + 1}"] = g.reshape(self.cores[n].shape)
        if "bias" in self.params:
            self.grads["bias"] = dz.sum(axis=0)
        dx = _einsum(",".join(core_specs + [out_spec]) + "->" + x_spec, *cores, dz)
        return dx


class DenseLayer(Layer):
    """``y = act(x W^T + b)`` on ``(B, J)`` inputs with ``W`` of shape ``K x J``."""

    name = "dense"

    def __init__(self, w, bias=None, activation="identity"):
        super().__init__()
        self.params["W"] = np.array(w, dtype=float)
        if bias is not None:
            self.params["bias"] = np.array(bias, dtype=float)
        self.activation = activation

    def output_shape(self, input_shape):
        return (self.params["W"].shape[0],)

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.params["W"].shape[1]:
            raise ShapeError(f"dense layer expects (B, {self.params['W'].shape[1]}), got {x.shape}")
        z = x @ self.params["W"].T
        if "bias" in self.params:
            z = z + self.params["bias"]
        y = activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def backward(self, grad):
        x, z, y = self._take_cache()
        dz = activate_backward(z, y, grad, self.activation)
        self.grads = {"W": dz.T @ x}
        if "bias" in self.params:
            self.grads["bias"] = dz.sum(axis=0)
        return dz @ self.params["W"]


class RNNLayer(Layer):
    """Recurrent layer ``h_t = act(Wr h_{t-1} + Wx x_t + b)`` on ``(B, T, J)``; returns all states."""

    name = "rnn"

    def __init__(self, wr, wx, bias=None, activation="identity"):
        super().__init__()
        self.params["Wr"] = np.array(wr, dtype=float)
        self.params["Wx"] = np.array(wx, dtype=float)
        if bias is not None:
            self.params["bias"] = np.array(bias, dtype=float)
        self.activation = activation

    def output_shape(self, input_shape):
        return (input_shape[0], self.params["Wr"].shape[0])

    def forward(self, x):
        p = self.params
        batch, steps, _ = x.shape
        k = p["Wr"].shape[0]
        zs = np.zeros((batch, steps, k))
        hs = np.zeros((batch, steps, k))
        h = np.zeros((batch, k))
        for t in range(steps):
            z = h @ p["Wr"].T + x[:, t] @ p["Wx"].T
            if "bias" in p:
                z = z + p["bias"]
            h = activate(z, self.activation)
            zs[:, t], hs[:, t] = z, h
        self._cache = (x, zs, hs)
        return hs

    def backward(self, grad):
        x, zs, hs = self._take_cache()
        p = self.params
        g = {name: np.zeros_like(v) for name, v in p.items()}
        dx = np.zeros_like(x)
        carry = np.zeros_like(hs[:, 0])
        for t in range(x.shape[1] - 1, -1, -1):
            dz = activate_backward(zs[:, t], hs[:, t], grad[:, t] + carry, self.activation)
            prev = hs[:, t - 1] if t > 0 else np.zeros_like(hs[:, 0])
            g["Wr"] += dz.T @ prev
            g["Wx"] += dz.T @ x[:, t]
            if "bias" in g:
                g["bias"] += dz.sum(axis=0)
            dx[:, t] = dz @ p["Wx"]
            carry = dz @ p["Wr"]
        self.grads = g
        return dx


class Activation(Layer):
    name = "activation"

    def __init__(self, kind):
        super().__init__()
        if kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {kind!r}")
        self.kind = kind

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x):
        y = activate(x, self.kind)
        self._cache = (x, y)
        return y

    def backward(self, grad):
        x, y = self._take_cache()
        self.grads = {}
        return activate_backward(x, y, grad, self.kind)


class Flatten(Layer):
    """Per-sample vectorization (last mode fastest)."""

    name = "flatten"

    def output_shape(self, input_shape):
        return (prod(input_shape),)

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        shape = self._take_cache()
        self.grads = {}
        return grad.reshape(shape)


class Reshape(Layer):
    name = "reshape"

    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(shape)

    def output_shape(self, input_shape):
        return self.shape

    def forward(self, x):
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, grad):
        shape = self._take_cache()
        self.grads = {}
        return grad.reshape(shape)


class Matricize(Layer):
    """Per-sample mode-``n`` matricization (1-based ``mode``)."""

    name = "matricize"

    def __init__(self, mode):
        super().__init__()
        self.mode = int(mode)

    def output_shape(self, input_shape):
        size = input_shape[self.mode - 1]
        return (size, prod(input_shape) // size)

    def forward(self, x):
        self._cache = x.shape[1:]
        return np.stack([matricize(sample, self.mode) for sample in x])

    def backward(self, grad):
        shape = self._take_cache()
        self.grads = {}
        return np.stack([dematricize(g, self.mode, shape) for g in grad])


class Model:
    """Sequential stack of layers with a flat, ordered parameter registry."""

    def __init__(self, layers, input_shape=None):
        self.layers = list(layers)
        self.input_shape = None if input_shape is None else tuple(input_shape)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    __call__ = forward

    def backward(self, grad):
        """Back-propagate ``dLoss/dY``; returns ``(dLoss/dX, gradients by name)``."""
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        grads = {}
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                grads[f"{i}.{name}"] = layer.grads[name]
        return grad, grads

    def parameters(self):
        """Name -> array, in layer order. The arrays are the live parameters."""
        return {f"{i}.{name}": p for i, layer in enumerate(self.layers) for name, p in layer.params.items()}

    def set_parameters(self, params):
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                key = f"{i}.{name}"
                new = np.asarray(params[key], dtype=float)
                if new.shape != layer.params[name].shape:
                    raise ShapeError(f"parameter {key} has shape {layer.params[name].shape}, got {new.shape}")
                layer.params[name] = new.copy()

    def count_params(self):
        return sum(layer.param_count() for layer in self.layers)

    def output_shape(self, input_shape=None):
        shape = input_shape or self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return tuple(shape)

    def describe(self):
        return [(layer.name, layer.param_count()) for layer in self.layers]
