"""Training losses and the momentum update."""

from __future__ import annotations

import numpy as np

BCE_EPS = 1e-7


def hinge_loss(s_plus, s_minus, margin: float):
    """``max(0, margin + s_minus - s_plus)`` with its subgradients.

    Returns ``(loss, dL/ds_plus, dL/ds_minus)``, elementwise for arrays.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    s_plus = np.asarray(s_plus, dtype=np.float64)
    s_minus = np.asarray(s_minus, dtype=np.float64)
    z = margin + s_minus - s_plus
    active = z > 0
    loss = np.where(active, z, 0.0)
    g = active.astype(np.float64)
    return loss, -g, g


def bce_loss(s, t):
    """Negative log-likelihood ``-(t log s + (1 - t) log(1 - s))``.

    ``s`` is clamped to ``[eps, 1 - eps]``; the gradient is zero where the
    clamp is active. Returns ``(loss, dL/ds)``.
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    sc = np.clip(s, BCE_EPS, 1 - BCE_EPS)
    loss = -(t * np.log(sc) + (1 - t) * np.log1p(-sc))
    grad = -t / sc + (1 - t) / (1 - sc)
    grad = np.where((s < BCE_EPS) | (s > 1 - BCE_EPS), 0.0, grad)
    return loss, grad


def sgd_momentum_step(params, grads, velocity, lr: float, momentum: float):
    """Classical momentum: ``v <- momentum * v - lr * g``; ``theta <- theta + v``.

    Works on matching lists of arrays and returns new lists.
    """
    if not (len(params) == len(grads) == len(velocity)):
        raise ValueError("params, grads and velocity differ in length")
    new_p, new_v = [], []
    for p, g, v in zip(params, grads, velocity):
        p, g, v = np.asarray(p), np.asarray(g), np.asarray(v)
        if not (p.shape == g.shape == v.shape):
            raise ValueError(f"shape mismatch: {p.shape}, {g.shape}, {v.shape}")
        v = (momentum * v - lr * g).astype(p.dtype)
        new_v.append(v)
        new_p.append((p + v).astype(p.dtype))
    return new_p, new_v
