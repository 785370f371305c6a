"""Dense tensor algebra.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The
linearization order used by :func:`vectorize` and :func:`matricize` is
last-mode-fastest (C order): entry ``(i_1, ..., i_N)`` sits at flat position
``((i_1 * I_2 + i_2) * I_3 + i_3) ...``. Under this convention the Tucker
product vectorizes as ``vec(C) = (B1 kron ... kron BN) vec(A)``.

Mode numbers in this public API are 1-based, as in the usual mode-n notation.
"""

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor shapes do not conform."""


def as_tensor(a):
    """Convert ``a`` to a float64 array, rejecting NaN and Inf."""
    t = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite values")
    return t


def _check_mode(t, n):
    order = np.ndim(t)
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"mode must be an integer, got {n!r}")
    if not 1 <= n <= order:
        raise IndexError(f"mode {n} out of range for order-{order} tensor")
    return int(n) - 1


def vectorize(t):
    """Flatten ``t`` into an order-1 tensor (last mode fastest).

    An order-0 tensor becomes a length-1 vector.
    """
    return as_tensor(t).reshape(-1)


def tensorize(v, shape):
    """Inverse of :func:`vectorize`."""
    v = as_tensor(v)
    shape = tuple(int(s) for s in shape)
    if any(s < 1 for s in shape):
        raise ShapeError(f"mode sizes must be >= 1, got {shape}")
    if v.size != int(np.prod(shape, dtype=np.int64)):
        raise ShapeError(f"cannot tensorize {v.size} entries into shape {shape}")
    return v.reshape(shape)


def _unfold(t, axis):
    # 0-based unfolding shared by matricize and the mode product; keeping one
    # code path makes the two bit-identical.
    return np.moveaxis(t, axis, 0).reshape(t.shape[axis], -1)


def _fold(m, axis, shape):
    moved = (shape[axis],) + tuple(s for k, s in enumerate(shape) if k != axis)
    return np.moveaxis(m.reshape(moved), 0, axis)


def _mode_dot(t, axis, mat):
    """Multiply ``mat`` into 0-based ``axis`` of ``t`` (no validation)."""
    shape = list(t.shape)
    shape[axis] = mat.shape[0]
    return _fold(mat @ _unfold(t, axis), axis, tuple(shape))


def matricize(t, n):
    """Mode-``n`` unfolding: an ``I_n x prod(I_k, k != n)`` matrix.

    Columns are ordered by the remaining modes, last mode fastest.
    """
    t = as_tensor(t)
    return _unfold(t, _check_mode(t, n))


def dematricize(m, n, shape):
    """Inverse of :func:`matricize` for a tensor of the given ``shape``."""
    m = as_tensor(m)
    shape = tuple(int(s) for s in shape)
    if not 1 <= n <= len(shape):
        raise IndexError(f"mode {n} out of range for order-{len(shape)} shape")
    axis = n - 1
    rest = int(np.prod(shape, dtype=np.int64)) // shape[axis]
    if m.shape != (shape[axis], rest):
        raise ShapeError(f"matrix of shape {m.shape} does not unfold {shape} along mode {n}")
    return _fold(m, axis, shape)


def kronecker(a, b):
    """Left Kronecker product: block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("kronecker expects two matrices")
    (i1, i2), (j1, j2) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(i1 * j1, i2 * j2)


def contract(a, n, b, m):
    """Contract mode ``n`` of ``a`` with mode ``m`` of ``b``.

    The result keeps the remaining modes of ``a`` in order, followed by the
    remaining modes of ``b``.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    ax = _check_mode(a, n)
    bx = _check_mode(b, m)
    if a.shape[ax] != b.shape[bx]:
        raise ShapeError(
            f"cannot contract mode {n} (size {a.shape[ax]}) with mode {m} (size {b.shape[bx]})"
        )
    return np.tensordot(a, b, axes=(ax, bx))


def mode_n_product(a, n, b):
    """Mode-``n`` product with a ``J x I_n`` matrix ``b``.

    Equal to ``dematricize(b @ matricize(a, n), n, new_shape)``.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    axis = _check_mode(a, n)
    if b.ndim != 2 or b.shape[1] != a.shape[axis]:
        raise ShapeError(
            f"matrix of shape {b.shape} cannot act on mode {n} of size {a.shape[axis]}"
        )
    return _mode_dot(a, axis, b)


def tucker_product(a, factors):
    """Apply a sequence of mode products.

    Parameters
    ----------
    a : array_like
        Core tensor.
    factors : sequence of (int, array_like)
        ``(mode, matrix)`` pairs, at most one per mode. Modes without a factor
        are left untouched.

    Returns
    -------
    numpy.ndarray
    """
    a = as_tensor(a)
    seen = set()
    checked = []
    for mode, mat in factors:
        axis = _check_mode(a, mode)
        if axis in seen:
            raise ValueError(f"duplicate factor for mode {mode}")
        seen.add(axis)
        mat = as_tensor(mat)
        if mat.ndim != 2 or mat.shape[1] != a.shape[axis]:
            raise ShapeError(
                f"factor of shape {mat.shape} does not match mode {mode} of size {a.shape[axis]}"
            )
        checked.append((axis, mat))
    out = a
    for axis, mat in checked:
        out = _mode_dot(out, axis, mat)
    return out
