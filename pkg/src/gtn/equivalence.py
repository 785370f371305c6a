"""Randomized checks that classical layers are special cases of the GTN forward pass.

Each check draws random instances, evaluates the classical layer directly and
through :func:`gtn.network.gtn_forward`, and records the worst absolute
difference.
"""

from dataclasses import dataclass

import numpy as np

from gtn.graphs import gso_time_decay
from gtn.network import (
    attention_as_gtn,
    attention_forward,
    cnn_as_gtn,
    cnn_forward,
    dnn_as_gtn,
    dnn_forward,
    gcn_as_gtn,
    gcn_forward,
    rnn_closed_form,
    rnn_unrolled,
)


@dataclass
class EquivalenceResult:
    name: str
    max_error: float
    tolerance: float
    instances: int

    @property
    def passed(self):
        return self.max_error <= self.tolerance

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name:<28s} max|diff|={self.max_error:.3e}  tol={self.tolerance:g}  n={self.instances}"


def _diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def random_symmetric_adjacency(n, rng, density=0.5):
    upper = np.triu(rng.uniform(size=(n, n)) < density, k=1) * rng.uniform(0.1, 2.0, size=(n, n))
    return upper + upper.T


def random_projection(k, rng):
    """Idempotent ``Q (Q^T Q)^-1 Q^T`` for a random ``k x r`` Q, ``1 <= r <= k``."""
    r = int(rng.integers(1, k + 1))
    q = rng.standard_normal((k, r))
    return q @ np.linalg.solve(q.T @ q, q.T)


def check_dnn(rng, n=100):
    worst = 0.0
    for _ in range(n):
        j, k = rng.integers(1, 7, size=2)
        x, w = rng.standard_normal(j), rng.standard_normal((k, j))
        worst = max(worst, _diff(dnn_forward(x, w), dnn_as_gtn(x, w)))
    return EquivalenceResult("DNN", worst, 1e-12, n)


def check_gcn(rng, n=100):
    worst = 0.0
    for _ in range(n):
        i, j, k = rng.integers(1, 7, size=3)
        x, w = rng.standard_normal((i, j)), rng.standard_normal((j, k))
        a = random_symmetric_adjacency(i, rng)
        worst = max(worst, _diff(gcn_forward(x, a, w), gcn_as_gtn(x, a, w)))
    return EquivalenceResult("GCN", worst, 1e-12, n)


def check_cnn(rng, n=100):
    worst = 0.0
    for _ in range(n):
        p = int(rng.integers(1, 6))
        i = int(rng.integers(p + 1, 17))
        x, k = rng.standard_normal(i), rng.standard_normal(p)
        worst = max(worst, _diff(cnn_forward(x, k), cnn_as_gtn(x, k)))
    return EquivalenceResult("CNN", worst, 1e-12, n)


def check_attention(rng, n=100):
    worst = 0.0
    for _ in range(n):
        i, j, k = rng.integers(1, 7, size=3)
        x = rng.standard_normal((i, j))
        wq, wk, wv = (rng.standard_normal((j, k)) for _ in range(3))
        worst = max(worst, _diff(attention_forward(x, wq, wk, wv, k), attention_as_gtn(x, wq, wk, wv, k)))
    return EquivalenceResult("Attention", worst, 1e-12, n)


def check_rnn(rng, n=50, max_steps=8, max_hidden=4):
    worst = 0.0
    for _ in range(n):
        i = int(rng.integers(1, max_steps + 1))
        k = int(rng.integers(1, max_hidden + 1))
        j = int(rng.integers(1, 5))
        c = float(rng.uniform(0.05, 1.0))
        w1 = random_projection(k, rng)
        x, wx = rng.standard_normal((i, j)), rng.standard_normal((k, j))
        worst = max(worst, _diff(rnn_closed_form(x, w1, wx, c), rnn_unrolled(x, c * w1, wx)))
    return EquivalenceResult("RNN closed form", worst, 1e-8, n)


def check_unnormalized_gcn(rng, n=50):
    """With ``W1 = I`` the closed form is ``(I + S) Xt``.

    Inputs are small integers and ``c = 1/2`` so every intermediate is exactly
    representable and the comparison is bit-exact.
    """
    worst = 0.0
    for _ in range(n):
        i, j, k = (int(v) for v in rng.integers(1, 7, size=3))
        x = rng.integers(-4, 5, size=(i, j)).astype(float)
        wx = rng.integers(-3, 4, size=(k, j)).astype(float)
        xt = x @ wx.T
        s = gso_time_decay(i, 0.5).matrix
        worst = max(worst, _diff(rnn_closed_form(x, np.eye(k), wx, 0.5), (np.eye(i) + s) @ xt))
    return EquivalenceResult("RNN W1=I (un-normalized GCN)", worst, 0.0, n)


def run_equivalence_suite(seed=0, n=100, n_rnn=50):
    rng = np.random.default_rng(seed)
    return [
        check_dnn(rng, n),
        check_gcn(rng, n),
        check_cnn(rng, n),
        check_attention(rng, n),
        check_rnn(rng, n_rnn),
        check_unnormalized_gcn(rng, n_rnn),
    ]
