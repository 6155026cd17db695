"""Batched forward and backward passes for both architectures.

Convolutions use an im2col layout: every valid ``k x k`` window becomes a
row, so each layer is one matrix product forward and two backward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..net import ACCURATE, FAST, NetworkSpec, NetworkWeights, sigmoid
from .losses import bce_loss, hinge_loss

HINGE = "hinge"
BCE = "bce"


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    # (B, C, H, W) -> (B, Ho, Wo, C*k*k)
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    b, c, ho, wo = win.shape[:4]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b, ho, wo, c * k * k)


def _col2im(cols: np.ndarray, shape: tuple[int, ...], k: int) -> np.ndarray:
    b, c, h, w = shape
    ho, wo = h - k + 1, w - k + 1
    cols = cols.reshape(b, ho, wo, c, k, k)
    out = np.zeros(shape, dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            out[:, :, i : i + ho, j : j + wo] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return out


@dataclass
class _ConvCache:
    shape: tuple[int, ...]
    cols: np.ndarray
    pre: np.ndarray  # pre-activation, (B, Ho, Wo, F)
    relu: bool


def conv_tower_forward(spec: NetworkSpec, weights: NetworkWeights, x: np.ndarray):
    """Features ``(B, F)`` of ``(B, n, n)`` patches plus a cache for backward."""
    h = x[:, None]
    caches = []
    for i, (w, b) in enumerate(weights.conv):
        k = w.shape[-1]
        cols = _im2col(h, k)
        pre = cols @ w.reshape(w.shape[0], -1).T + b
        use_relu = spec.arch == ACCURATE or i < spec.num_conv_layers - 1
        caches.append(_ConvCache(h.shape, cols, pre, use_relu))
        act = np.maximum(pre, 0) if use_relu else pre
        h = act.transpose(0, 3, 1, 2)
    return h[:, :, 0, 0], caches


def conv_tower_backward(weights: NetworkWeights, caches, grad_feat: np.ndarray):
    grads = [None] * len(caches)
    g = grad_feat[:, None, None, :]  # (B, 1, 1, F) in (B, Ho, Wo, F) layout
    for i in range(len(caches) - 1, -1, -1):
        cache = caches[i]
        w, _ = weights.conv[i]
        if cache.relu:
            g = g * (cache.pre > 0)
        flat_g = g.reshape(-1, g.shape[-1])
        flat_cols = cache.cols.reshape(-1, cache.cols.shape[-1])
        dw = (flat_g.T @ flat_cols).reshape(w.shape)
        db = flat_g.sum(axis=0)
        grads[i] = (dw, db)
        if i > 0:
            dcols = g @ w.reshape(w.shape[0], -1)
            dx = _col2im(dcols, cache.shape, w.shape[-1])
            g = dx.transpose(0, 2, 3, 1)
    return grads


def fc_forward(weights: NetworkWeights, z: np.ndarray):
    """Head on ``(B, 2F)`` rows; returns sigmoid scores ``(B,)`` and a cache."""
    acts = [z]
    pres = []
    last = len(weights.fc) - 1
    for i, (w, b) in enumerate(weights.fc):
        pre = acts[-1] @ w.T + b
        pres.append(pre)
        acts.append(np.maximum(pre, 0) if i < last else pre)
    s = sigmoid(acts[-1][:, 0])
    return s, (acts, pres, s)


def fc_backward(weights: NetworkWeights, cache, grad_s: np.ndarray):
    acts, pres, s = cache
    g = (grad_s * s * (1 - s))[:, None]
    grads = [None] * len(weights.fc)
    for i in range(len(weights.fc) - 1, -1, -1):
        w, _ = weights.fc[i]
        if i < len(weights.fc) - 1:
            g = g * (pres[i] > 0)
        grads[i] = (g.T @ acts[i], g.sum(axis=0))
        g = g @ w
    return grads, g


def cosine_forward(fl: np.ndarray, fr: np.ndarray):
    nl = np.sqrt((fl * fl).sum(axis=1))
    nr = np.sqrt((fr * fr).sum(axis=1))
    dot = (fl * fr).sum(axis=1)
    denom = np.maximum(nl * nr, np.finfo(fl.dtype).tiny)
    return dot / denom, (fl, fr, nl, nr, dot / denom)


def cosine_backward(cache, grad_s: np.ndarray):
    fl, fr, nl, nr, s = cache
    tiny = np.finfo(fl.dtype).tiny
    nl = np.maximum(nl, tiny)[:, None]
    nr = np.maximum(nr, tiny)[:, None]
    g = grad_s[:, None]
    dfl = g * (fr / (nl * nr) - s[:, None] * fl / (nl * nl))
    dfr = g * (fl / (nl * nr) - s[:, None] * fr / (nr * nr))
    return dfl, dfr


def scores(spec: NetworkSpec, weights: NetworkWeights, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Similarity of each ``(left[i], right[i])`` patch pair."""
    feats, _ = conv_tower_forward(spec, weights, np.concatenate([left, right]))
    fl, fr = np.split(feats, 2)
    if spec.arch == FAST:
        return cosine_forward(fl, fr)[0]
    return fc_forward(weights, np.concatenate([fl, fr], axis=1))[0]


def loss_and_grads(
    spec: NetworkSpec,
    weights: NetworkWeights,
    left: np.ndarray,
    right: np.ndarray,
    labels: np.ndarray,
    loss: str,
    margin: float = 0.2,
):
    """Mean loss over a batch and gradients for every parameter array.

    With the hinge loss the batch alternates positive and negative examples
    and the mean runs over pairs; with BCE it runs over examples.
    """
    n = len(left)
    feats, caches = conv_tower_forward(spec, weights, np.concatenate([left, right]))
    fl, fr = feats[:n], feats[n:]
    if spec.arch == FAST:
        s, head_cache = cosine_forward(fl, fr)
    else:
        z = np.concatenate([fl, fr], axis=1)
        s, head_cache = fc_forward(weights, z)

    if loss == HINGE:
        if n % 2:
            raise ValueError("hinge loss needs whole positive/negative pairs")
        if not (np.all(labels[0::2] == 1) and np.all(labels[1::2] == 0)):
            raise ValueError("hinge batches must alternate positive and negative examples")
        value, g_plus, g_minus = hinge_loss(s[0::2], s[1::2], margin)
        grad_s = np.empty(n)
        grad_s[0::2] = g_plus
        grad_s[1::2] = g_minus
        grad_s /= n // 2
        value = value.mean()
    elif loss == BCE:
        if spec.arch == FAST:
            raise ValueError("binary cross-entropy needs the sigmoid output of the accurate network")
        value, grad_s = bce_loss(s, labels)
        value = value.mean()
        grad_s = grad_s / n
    else:
        raise ValueError(f"unknown loss {loss!r}")
    grad_s = grad_s.astype(feats.dtype)

    if spec.arch == FAST:
        dfl, dfr = cosine_backward(head_cache, grad_s)
        fc_grads = []
    else:
        fc_grads, dz = fc_backward(weights, head_cache, grad_s)
        f = spec.num_conv_feature_maps
        dfl, dfr = dz[:, :f], dz[:, f:]
    conv_grads = conv_tower_backward(weights, caches, np.concatenate([dfl, dfr]))
    grads = []
    for dw, db in conv_grads + fc_grads:
        grads.extend((dw, db))
    return float(value), grads
