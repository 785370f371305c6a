"""Losses, finite-difference gradient checks, Adam, and the training loop."""

from dataclasses import dataclass, field, replace

import numpy as np

from gtn.tensor import ShapeError

LOSSES = ("mse", "binary_cross_entropy")


class NonFiniteError(FloatingPointError):
    """A loss or gradient went NaN/Inf."""


def loss(kind, y, t):
    """Return ``(value, dLoss/dY)`` for predictions ``y`` against targets ``t``."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.shape != t.shape:
        raise ShapeError(f"prediction shape {y.shape} != target shape {t.shape}")
    count = y.size
    if kind == "mse":
        r = y - t
        return float(np.mean(r**2)), 2.0 * r / count
    if kind == "binary_cross_entropy":
        if np.any(y <= 0) or np.any(y >= 1):
            raise ValueError("binary cross-entropy needs predictions strictly inside (0, 1)")
        value = -np.mean(t * np.log(y) + (1 - t) * np.log1p(-y))
        return float(value), (-t / y + (1 - t) / (1 - y)) / count
    raise ValueError(f"unknown loss {kind!r}")


def backward(model, x, grad_y):
    """Gradients of every parameter given ``dLoss/dY``; needs a prior ``model.forward``."""
    _, grads = model.backward(grad_y)
    return grads


def loss_and_grads(model, x, t, kind="mse"):
    y = model.forward(x)
    value, dy = loss(kind, y, t)
    return value, backward(model, x, dy)


@dataclass
class FDReport:
    max_rel_error: float
    per_param: dict
    tolerance: float
    h: float

    @property
    def passed(self):
        return self.max_rel_error < self.tolerance

    def lines(self):
        out = [f"{name:<20s} rel_err={err:.3e}" for name, err in self.per_param.items()]
        verdict = "PASS" if self.passed else "FAIL"
        out.append(f"max rel error {self.max_rel_error:.3e} (tol {self.tolerance:g}, h {self.h:g}): {verdict}")
        return out


def fd_check(model, x, t, kind="mse", h=1e-5, tolerance=1e-5, grads=None, floor=1e-8):
    """Compare analytic gradients with central differences on every parameter entry.

    The error for one parameter tensor is ``max|analytic - numeric|`` divided by
    the larger of the two gradients' max-norms (at least ``floor``). Pass
    ``grads`` to check a precomputed gradient instead of the model's own.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if grads is None:
        _, grads = loss_and_grads(model, x, t, kind)
    per_param = {}
    for name, p in model.parameters().items():
        numeric = np.zeros_like(p)
        flat = p.reshape(-1)
        num_flat = numeric.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up, _ = loss(kind, model.forward(x), t)
            flat[idx] = orig - h
            down, _ = loss(kind, model.forward(x), t)
            flat[idx] = orig
            num_flat[idx] = (up - down) / (2 * h)
        analytic = np.asarray(grads[name])
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), floor)
        per_param[name] = float(np.max(np.abs(analytic - numeric)) / scale)
    worst = max(per_param.values()) if per_param else 0.0
    return FDReport(worst, per_param, tolerance, h)


@dataclass(frozen=True)
class OptimizerState:
    """Adam state. Moments are keyed like the parameters."""

    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def optimizer_step(state, params, grads):
    """One Adam update with bias correction. Inputs are not modified.

    Returns ``(new_params, new_state)``. Raises :class:`NonFiniteError` if any
    gradient is NaN/Inf, leaving everything untouched.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name}; step rejected")
    step = state.step + 1
    new_params, m_new, v_new = {}, {}, {}
    c1 = 1.0 - state.beta1**step
    c2 = 1.0 - state.beta2**step
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=float)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.beta1 * state.m.get(name, 0.0) + (1 - state.beta1) * g
        v = state.beta2 * state.v.get(name, 0.0) + (1 - state.beta2) * g * g
        new_params[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        m_new[name], v_new[name] = m, v
    return new_params, replace(state, step=step, m=m_new, v=v_new)


class PlateauHalving:
    """Halve the learning rate when the best loss has not improved for ``patience`` steps."""

    def __init__(self, patience=50, min_lr=1e-6, rel_improvement=1e-4):
        self.patience = patience
        self.min_lr = min_lr
        self.rel_improvement = rel_improvement
        self.best = np.inf
        self.since = 0

    def __call__(self, state, value):
        if value < self.best * (1 - self.rel_improvement):
            self.best = value
            self.since = 0
            return state
        self.since += 1
        if self.since >= self.patience and state.lr > self.min_lr:
            self.since = 0
            return replace(state, lr=max(state.lr / 2, self.min_lr))
        return state


def fit(model, x, t, kind="mse", steps=1000, lr=1e-2, batch_size=None, rng=None,
        patience=50, min_lr=1e-6, tol=0.0, reject_increase=None):
    """Train with Adam; returns the per-step training loss.

    Full-batch unless ``batch_size`` is given, in which case ``rng`` shuffles
    the samples each epoch. Stops early once the loss falls below ``tol``.

    On top of halving on plateau, a full-batch step that raises the loss is
    rejected: parameters roll back to the last accepted point, the learning
    rate is halved (never below ``min_lr``) and the moment estimates restart. The recorded history
    is the loss of the parameters held at each step, so it never increases.
    ``reject_increase`` defaults to on for full-batch training and off for
    mini-batches, whose losses are not comparable step to step.
    """
    state = OptimizerState(lr=lr)
    schedule = PlateauHalving(patience=patience, min_lr=min_lr)
    n = x.shape[0]
    full_batch = batch_size is None or batch_size >= n
    if reject_increase is None:
        reject_increase = full_batch
    history = []
    order = np.arange(n)
    cursor = n
    accepted = None  # (loss, params, grads, state) at the last accepted point
    for _ in range(steps):
        if full_batch:
            xb, tb = x, t
        else:
            if cursor + batch_size > n:
                order = rng.permutation(n) if rng is not None else order
                cursor = 0
            idx = order[cursor:cursor + batch_size]
            cursor += batch_size
            xb, tb = x[idx], t[idx]
        value, grads = loss_and_grads(model, xb, tb, kind)
        if not np.isfinite(value):
            raise NonFiniteError(f"loss became non-finite at step {len(history)}")
        if reject_increase and accepted is not None and value > accepted[0]:
            value, params, grads, _ = accepted
            model.set_parameters(params)
            # stale momentum can keep pointing uphill at any step size, so the
            # retry starts from fresh moments: its first step is a descent direction
            state = OptimizerState(lr=max(state.lr / 2, min_lr), beta1=state.beta1,
                                   beta2=state.beta2, eps=state.eps)
        elif reject_increase:
            accepted = (value, {k: p.copy() for k, p in model.parameters().items()}, grads, state)
        history.append(value)
        if value < tol:
            break
        params, state = optimizer_step(state, model.parameters(), grads)
        model.set_parameters(params)
        state = schedule(state, value)
    return history
