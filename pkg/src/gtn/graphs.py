"""Graph shift operators (GSOs) and graph inference."""

from dataclasses import dataclass

import numpy as np

from gtn.tensor import ShapeError, as_tensor, contract, mode_n_product
from gtn.tt import convolution_tensor

KINDS = ("adjacency", "gcn_normalized", "circulant", "time_decay", "attention", "inferred", "custom")


@dataclass(frozen=True)
class GraphShiftOperator:
    """Square matrix over one domain mode, tagged with how it was built."""

    matrix: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        m = as_tensor(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"GSO must be a square matrix, got shape {m.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown GSO kind {self.kind!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, size):
        return cls(np.eye(size), "custom")


def _square(a, what="adjacency"):
    a = as_tensor(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} must be square, got shape {a.shape}")
    return a


def gso_adjacency(a):
    a = _square(a)
    if np.any(a < 0):
        raise ValueError("adjacency has negative entries")
    return GraphShiftOperator(a, "adjacency")


def gso_gcn(a):
    """Renormalized GCN operator ``D^-1/2 (I + A) D^-1/2`` with D the degrees of I + A."""
    a = _square(a)
    if np.any(a < 0):
        raise ValueError("adjacency has negative entries")
    a_tilde = np.eye(a.shape[0]) + a
    inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return GraphShiftOperator(inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :], "gcn_normalized")


def gso_circulant(kernel, size):
    """Circulant GSO built by contracting the convolution tensor with ``kernel``.

    Row ``i`` holds ``kernel[p]`` at column ``(i + p) % size``.
    """
    kernel = as_tensor(kernel)
    if kernel.ndim != 1:
        raise ShapeError("kernel must be a vector")
    conv = convolution_tensor(size, kernel.shape[0])
    return GraphShiftOperator(contract(conv, 3, kernel, 1), "circulant")


def gso_time_decay(size, c=0.9):
    """Directed time graph: entry ``(i, j)`` is ``c**(i - j)`` for ``i > j``, else 0."""
    if c <= 0:
        raise ValueError(f"decay coefficient must be positive, got {c}")
    if size < 1:
        raise ValueError("size must be >= 1")
    i = np.arange(size)
    gap = i[:, None] - i[None, :]
    s = np.where(gap > 0, float(c) ** np.maximum(gap, 0), 0.0)
    return GraphShiftOperator(s, "time_decay")


def softmax(z, axis=-1):
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def gso_attention(x, wq, wk, d_k):
    """Input-dependent GSO ``softmax(X Wq (X Wk)^T / sqrt(d_k))``, row-wise."""
    x, wq, wk = as_tensor(x), as_tensor(wq), as_tensor(wk)
    if x.ndim != 2:
        raise ShapeError("attention input must be a matrix (time x features)")
    if wq.ndim != 2 or wq.shape != wk.shape or wq.shape[0] != x.shape[1]:
        raise ShapeError(f"Wq {wq.shape} and Wk {wk.shape} must both be {x.shape[1]} x K")
    if d_k <= 0:
        raise ValueError("d_k must be positive")
    scores = (x @ wq) @ (x @ wk).T / np.sqrt(d_k)
    return GraphShiftOperator(softmax(scores, axis=1), "attention")


def gaussian(sigma):
    """Similarity ``exp(-|a - b|^2 / (2 sigma^2))``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    def f(a, b):
        d = np.asarray(a) - np.asarray(b)
        return float(np.exp(-np.dot(d, d) / (2.0 * sigma**2)))

    return f


def cosine_clamped(a, b):
    """Cosine similarity clamped below at zero."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return max(0.0, float(np.dot(a, b) / (na * nb)))


def similarity_matrix(features, f):
    """Dense ``I x I`` matrix of pairwise similarities."""
    feats = [as_tensor(v).reshape(-1) for v in features]
    if not feats:
        raise ValueError("empty feature set")
    if len({v.shape for v in feats}) != 1:
        raise ShapeError("all feature vectors must have the same length")
    n = len(feats)
    s = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            s[i, j] = s[j, i] = f(feats[i], feats[j])
    return s


def gso_infer(features, f, top_k=4, threshold=None):
    """Infer a graph from vertex features.

    Edge weights come from ``f``. With ``threshold`` set, weights below it are
    dropped; otherwise each vertex keeps its ``top_k`` strongest neighbours and
    the result is symmetrized by an elementwise max with its transpose. The
    diagonal is always zero.
    """
    s = similarity_matrix(features, f)
    n = s.shape[0]
    np.fill_diagonal(s, 0.0)
    if threshold is not None:
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        out = np.where(s >= threshold, s, 0.0)
    else:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        out = np.zeros_like(s)
        k = min(top_k, n - 1)
        for i in range(n):
            scores = s[i].copy()
            scores[i] = -np.inf
            # stable order so ties resolve to the lower index
            nbrs = np.argsort(-scores, kind="stable")[:k]
            out[i, nbrs] = s[i, nbrs]
        out = np.maximum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return GraphShiftOperator(out, "inferred")


def graph_shift(gso, x):
    """Neighbourhood aggregation ``Y = S X`` along the first mode of ``x``."""
    s = gso.matrix if isinstance(gso, GraphShiftOperator) else as_tensor(gso)
    x = as_tensor(x)
    if x.ndim < 1 or x.shape[0] != s.shape[1]:
        raise ShapeError(f"GSO of size {s.shape[0]} cannot shift signal of shape {x.shape}")
    return mode_n_product(x, 1, s)


def ring_adjacency(n):
    a = np.zeros((n, n))
    i = np.arange(n)
    a[i, (i + 1) % n] = 1.0
    a[(i + 1) % n, i] = 1.0
    if n <= 2:
        np.fill_diagonal(a, 0.0)
    return a


def load_adjacency_csv(path):
    """Read a header-free square numeric grid."""
    from gtn.harness.data import read_grid

    return _square(read_grid(path))
