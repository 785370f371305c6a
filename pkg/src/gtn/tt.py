"""Tensor-Train (matrix product operator) weights.

A ``K x J`` matrix is tensorized as an order-2N tensor with row modes
``K_1..K_N`` and column modes ``J_1..J_N`` (both last-mode-fastest) and stored
as N cores of shape ``R_{n-1} x K_n x J_n x R_n`` with ``R_0 = R_N = 1``.
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from gtn.tensor import ShapeError, as_tensor, contract


@dataclass(frozen=True)
class TensorizationPlan:
    """Factorization of a ``matrix_rows x matrix_cols`` matrix into N mode pairs."""

    matrix_rows: int
    matrix_cols: int
    row_factors: tuple
    col_factors: tuple

    def __post_init__(self):
        rows = tuple(int(k) for k in self.row_factors)
        cols = tuple(int(j) for j in self.col_factors)
        object.__setattr__(self, "row_factors", rows)
        object.__setattr__(self, "col_factors", cols)
        if len(rows) < 1 or len(rows) != len(cols):
            raise ValueError("row and column factor lists must be non-empty and of equal length")
        if min(rows + cols) < 1:
            raise ValueError("factors must be >= 1")
        if prod(rows) != self.matrix_rows:
            raise ValueError(f"row factors {rows} do not multiply to {self.matrix_rows}")
        if prod(cols) != self.matrix_cols:
            raise ValueError(f"column factors {cols} do not multiply to {self.matrix_cols}")

    @classmethod
    def from_factors(cls, row_factors, col_factors):
        return cls(prod(row_factors), prod(col_factors), tuple(row_factors), tuple(col_factors))

    @property
    def order(self):
        return len(self.row_factors)


@dataclass(frozen=True)
class TTOperator:
    """Chain of order-4 cores ``R_{n-1} x K_n x J_n x R_n``.

    ``fit_error`` is the Frobenius reconstruction error when the operator came
    out of :func:`tt_from_matrix`, otherwise ``None``.
    """

    cores: tuple
    fit_error: float = field(default=None, compare=False)

    def __post_init__(self):
        cores = tuple(as_tensor(c) for c in self.cores)
        object.__setattr__(self, "cores", cores)
        if not cores:
            raise ValueError("a TT operator needs at least one core")
        for n, core in enumerate(cores):
            if core.ndim != 4:
                raise ShapeError(f"core {n} has order {core.ndim}, expected 4")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ShapeError("boundary ranks R_0 and R_N must be 1")
        for n in range(1, len(cores)):
            if cores[n - 1].shape[3] != cores[n].shape[0]:
                raise ShapeError(f"rank mismatch between cores {n - 1} and {n}")

    @property
    def output_dims(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def input_dims(self):
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self):
        return (1,) + tuple(c.shape[3] for c in self.cores)

    @property
    def plan(self):
        return TensorizationPlan.from_factors(self.output_dims, self.input_dims)


def _rank_caps(max_ranks, n_cores):
    if max_ranks is None:
        return [None] * (n_cores - 1)
    if np.isscalar(max_ranks):
        caps = [int(max_ranks)] * (n_cores - 1)
    else:
        caps = [int(r) for r in max_ranks]
        if len(caps) == n_cores + 1:
            caps = caps[1:-1]
        if len(caps) != n_cores - 1:
            raise ValueError(f"expected {n_cores - 1} internal ranks, got {len(caps)}")
    if any(r < 1 for r in caps):
        raise ValueError("ranks must be >= 1")
    return caps


_RANK_RTOL = 1e-14


def _fix_signs(u, vt):
    # Largest-magnitude entry of every left singular vector made positive.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def tt_from_matrix(w, plan, max_ranks=None, eps=None):
    """Fit a TT operator to ``w`` by a sequential SVD sweep.

    Parameters
    ----------
    w : array_like
        ``plan.matrix_rows x plan.matrix_cols`` matrix.
    plan : TensorizationPlan
    max_ranks : int or sequence of int, optional
        Hard cap on the internal ranks; a scalar applies to every bond. A list
        holds either the N-1 internal ranks or all N+1 ranks.
    eps : float, optional
        Relative Frobenius error budget spread evenly over the N-1 truncations.

    Returns
    -------
    TTOperator
        With ``fit_error`` set to the achieved Frobenius error.
    """
    w = as_tensor(w)
    if w.shape != (plan.matrix_rows, plan.matrix_cols):
        raise ShapeError(f"matrix of shape {w.shape} does not match plan {plan}")
    n_cores = plan.order
    caps = _rank_caps(max_ranks, n_cores)
    if eps is not None and eps < 0:
        raise ValueError("eps must be non-negative")

    rows, cols = plan.row_factors, plan.col_factors
    t = w.reshape(rows + cols)
    # interleave to (K_1, J_1, K_2, J_2, ...)
    t = t.transpose([k for n in range(n_cores) for k in (n, n_cores + n)])
    delta = 0.0
    if eps is not None and n_cores > 1:
        delta = eps * np.linalg.norm(w) / np.sqrt(n_cores - 1)

    cores = []
    rank = 1
    rest = t.reshape(-1)
    for n in range(n_cores - 1):
        unfolding = rest.reshape(rank * rows[n] * cols[n], -1)
        u, s, vt = np.linalg.svd(unfolding, full_matrices=False)
        # singular values at round-off level carry no information
        r = max(int(np.sum(s > s[0] * _RANK_RTOL)), 1) if s.size and s[0] > 0 else 1
        if eps is not None:
            tail = np.sqrt(np.cumsum((s**2)[::-1])[::-1])
            # smallest r whose discarded tail fits the budget
            keep = np.nonzero(np.append(tail, 0.0)[1:] <= delta)[0]
            r = int(keep[0]) + 1 if keep.size else len(s)
        if caps[n] is not None:
            r = min(r, caps[n])
        r = max(r, 1)
        u, vt = _fix_signs(u[:, :r], vt[:r])
        cores.append(u.reshape(rank, rows[n], cols[n], r))
        rest = s[:r, None] * vt
        rank = r
    cores.append(rest.reshape(rank, rows[-1], cols[-1], 1))

    op = TTOperator(tuple(cores))
    err = float(np.linalg.norm(w - tt_reconstruct(op)))
    return TTOperator(op.cores, fit_error=err)


def tt_reconstruct(op):
    """Contract the cores in chain order and reshape to the ``K x J`` matrix."""
    full = op.cores[0]
    for core in op.cores[1:]:
        full = contract(full, full.ndim, core, 1)
    n_cores = len(op.cores)
    full = full.reshape(sum(((k, j) for k, j in zip(op.output_dims, op.input_dims)), ()))
    full = full.transpose(list(range(0, 2 * n_cores, 2)) + list(range(1, 2 * n_cores, 2)))
    return full.reshape(prod(op.output_dims), prod(op.input_dims))


def _tt_apply_batch(cores, x):
    """Apply cores to ``x`` of shape ``(B, J_1, ..., J_N)`` one core at a time."""
    batch = x.shape[0]
    in_dims = [c.shape[2] for c in cores]
    out_dims = [c.shape[1] for c in cores]
    # t: (P, R_{n-1}, J_n, J_{n+1} * ... * J_N), P = B * K_1 * ... * K_{n-1}
    t = x.reshape(batch, 1, in_dims[0], -1)
    for n, core in enumerate(cores):
        y = np.tensordot(t, core, axes=([1, 2], [0, 2]))  # (P, rest, K_n, R_n)
        y = y.transpose(0, 2, 3, 1)
        p = y.shape[0] * y.shape[1]
        if n + 1 < len(cores):
            t = y.reshape(p, core.shape[3], in_dims[n + 1], -1)
        else:
            t = y.reshape(p)
    return t.reshape((batch,) + tuple(out_dims))


def tt_apply(op, x):
    """Multiply the operator into ``x`` without forming the dense matrix.

    ``x`` is either shaped ``(J_1, ..., J_N)``, giving a ``(K_1, ..., K_N)``
    result, or a flat vector of length ``prod(J_n)``, giving a flat vector.
    """
    x = as_tensor(x)
    in_dims = op.input_dims
    if x.ndim == 1 and x.shape[0] == prod(in_dims):
        return _tt_apply_batch(op.cores, x.reshape((1,) + in_dims)).reshape(-1)
    if x.shape != in_dims:
        raise ShapeError(f"input of shape {x.shape} does not match TT input dims {in_dims}")
    return _tt_apply_batch(op.cores, x[None])[0]


def tt_param_count(op):
    """Number of stored TT parameters, sum of R_{n-1} K_n J_n R_n."""
    return sum(c.size for c in op.cores)


def tt_param_count_for(plan, ranks):
    """TT parameter count for a plan and full rank vector ``R_0..R_N``."""
    ranks = list(ranks)
    if len(ranks) != plan.order + 1 or ranks[0] != 1 or ranks[-1] != 1:
        raise ValueError("ranks must list R_0..R_N with R_0 = R_N = 1")
    return sum(
        ranks[n] * k * j * ranks[n + 1]
        for n, (k, j) in enumerate(zip(plan.row_factors, plan.col_factors))
    )


def dense_param_count(plan):
    return plan.matrix_rows * plan.matrix_cols


def compression(plan, ranks):
    """Fraction of dense parameters saved by the TT format."""
    return 1.0 - tt_param_count_for(plan, ranks) / dense_param_count(plan)


def max_ranks(plan):
    """Largest useful internal ranks: min of the two unfolding sizes per bond."""
    sizes = [k * j for k, j in zip(plan.row_factors, plan.col_factors)]
    return [1] + [min(prod(sizes[: n + 1]), prod(sizes[n + 1 :])) for n in range(len(sizes) - 1)] + [1]


def identity_tt(dims):
    """TT form of the identity on ``prod(dims)`` with all ranks 1."""
    return TTOperator(tuple(np.eye(d).reshape(1, d, d, 1) for d in dims))


def random_tt(out_dims, in_dims, ranks, rng):
    """Random TT operator with Gaussian cores; ``ranks`` lists R_0..R_N."""
    ranks = list(ranks)
    if len(ranks) != len(out_dims) + 1:
        raise ValueError("ranks must list R_0..R_N")
    return TTOperator(
        tuple(
            rng.standard_normal((ranks[n], k, j, ranks[n + 1]))
            for n, (k, j) in enumerate(zip(out_dims, in_dims))
        )
    )


def convolution_tensor(size, width):
    """Order-3 ``size x size x width`` tensor turning a kernel into a circulant.

    Entry ``(i, j, p)`` (0-based) is 1 when ``j == (i + p) % size``, which is
    the 1-based rule ``t[i, (i+p-1) % I, p] = 1`` with a zero remainder read
    as index ``I``.
    """
    size, width = int(size), int(width)
    if width < 1:
        raise ValueError("kernel width must be >= 1")
    if size <= width:
        raise ValueError(f"need size > width, got size={size}, width={width}")
    t = np.zeros((size, size, width))
    i = np.arange(size)[:, None]
    p = np.arange(width)[None, :]
    t[np.broadcast_to(i, (size, width)), (i + p) % size, np.broadcast_to(p, (size, width))] = 1.0
    return t


def _bits(n):
    d = int(n).bit_length() - 1
    if n < 1 or 1 << d != n:
        raise ValueError(f"{n} is not a power of two")
    return d


def quantized_convolution_plan(size, width):
    """Bit-level plan pairing row bit n with column bits (j_n, p_n).

    ``size`` and ``width`` must be powers of two. Bits run most significant
    first; the kernel-index bits sit on the lowest levels.
    """
    d, e = _bits(size), _bits(width)
    if e >= d:
        raise ValueError("width must be smaller than size")
    col = tuple(4 if n >= d - e else 2 for n in range(d))
    return TensorizationPlan(size, size * width, (2,) * d, col)


def _quantized_columns(size, width):
    # column index of every (j, p) pair under quantized_convolution_plan
    d, e = _bits(size), _bits(width)
    j = np.arange(size)[:, None]
    p = np.arange(width)[None, :]
    col = np.zeros((size, width), dtype=np.int64)
    for n in range(d):
        jb = (j >> (d - 1 - n)) & 1
        if n >= d - e:
            col = col * 4 + jb * 2 + ((p >> (d - 1 - n)) & 1)
        else:
            col = col * 2 + jb
    return col


def quantize_convolution_tensor(t):
    """Rearrange an ``I x I x P`` tensor into the quantized plan's matrix."""
    t = as_tensor(t)
    size, _, width = t.shape
    cols = _quantized_columns(size, width)
    m = np.zeros((size, size * width))
    m[:, cols] = t
    return m


def dequantize_convolution_tensor(m, size, width):
    """Inverse of :func:`quantize_convolution_tensor`."""
    return as_tensor(m)[:, _quantized_columns(size, width)]
