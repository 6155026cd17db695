"""Semiglobal matching along the two horizontal and two vertical directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import INVALID_COST
from .imaging import as_image

DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class SgmParams:
    P1: float
    P2: float
    Q1: float
    Q2: float
    V: float
    D: float

    def __post_init__(self):
        if not (self.P2 > self.P1 > 0):
            raise ValueError("SGM penalties must satisfy P2 > P1 > 0")
        if not (self.Q2 >= self.Q1 > 1):
            raise ValueError("SGM divisors must satisfy Q2 >= Q1 > 1")
        if self.V < 1 or self.D <= 0:
            raise ValueError("sgm_V must be >= 1 and sgm_D > 0")


def penalties(d1, d2, params: SgmParams, direction: tuple[int, int]):
    """Gradient-adaptive ``(P1, P2)`` for intensity differences ``d1`` and ``d2``.

    Both penalties are divided by Q1 when one of the differences reaches
    ``params.D`` and by Q2 when both do; P1 is further divided by V on the
    vertical directions. Works elementwise on arrays.
    """
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    strong1 = d1 >= params.D
    strong2 = d2 >= params.D
    div = np.where(strong1 & strong2, params.Q2, np.where(strong1 | strong2, params.Q1, 1.0))
    p1 = params.P1 / div
    p2 = params.P2 / div
    if direction[0] == 0:
        p1 = p1 / params.V
    if p1.ndim == 0:
        return float(p1), float(p2)
    return p1.astype(np.float32), p2.astype(np.float32)


def _to_scan(a: np.ndarray, direction: tuple[int, int]) -> np.ndarray:
    # reorder so that axis 0 runs along the sweep and axis 1 across scanlines
    dx, dy = direction
    if dx != 0:
        a = np.swapaxes(a, 0, 1)
        return a[::-1] if dx < 0 else a
    return a[::-1] if dy < 0 else a


def sweep_direction(cost: np.ndarray, left, right, direction: tuple[int, int], params: SgmParams) -> np.ndarray:
    """Directional cost ``C_r`` of the SGM recurrence.

    ``direction`` is ``r = (dx, dy)``; the sweep visits ``p - r`` before
    ``p``. The first pixel of every scanline keeps its raw cost. Invalid
    entries stay invalid and never win a minimum; disparities outside the
    range are unavailable as ``d - 1``/``d + 1`` neighbours.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unsupported direction {direction}")
    left = as_image(left)
    right = as_image(right)
    cost = np.asarray(cost, dtype=np.float32)
    h, w, dmax = cost.shape
    if left.shape != (h, w) or right.shape != (h, w):
        raise ValueError("image and cost volume sizes differ")
    dx, dy = direction

    # D1 = |I_L(p) - I_L(p - r)|
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    py, px = np.clip(ys - dy, 0, h - 1), np.clip(xs - dx, 0, w - 1)
    d1 = np.abs(left - left[py, px])

    # D2 = |I_R(p - d) - I_R(p - d - r)|, zero when p - d - r leaves the frame
    disp = np.arange(dmax)[None, None, :]
    xr = np.broadcast_to(xs[:, :, None] - disp, (h, w, dmax))
    xr_prev = xr - dx
    rows = np.broadcast_to(ys[:, :, None], (h, w, dmax))
    yr_prev = rows - dy
    inside = (xr >= 0) & (xr_prev >= 0) & (xr_prev < w) & (yr_prev >= 0) & (yr_prev < h)
    cur = right[rows, np.clip(xr, 0, w - 1)]
    prev = right[np.clip(yr_prev, 0, h - 1), np.clip(xr_prev, 0, w - 1)]
    d2 = np.where(inside, np.abs(cur - prev), 0.0)

    p1, p2 = penalties(np.broadcast_to(d1[:, :, None], d2.shape), d2, params, direction)

    out = _sweep(_to_scan(cost, direction), _to_scan(p1, direction), _to_scan(p2, direction))
    return np.ascontiguousarray(_from_scan(out, direction))


@np.errstate(invalid="ignore")
def _sweep(c: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    # c, p1, p2: (steps, lines, dmax), swept along axis 0
    out = np.empty_like(c)
    valid = c != INVALID_COST
    inf = np.float32(np.inf)
    out[0] = c[0]
    for t in range(1, c.shape[0]):
        prev_cost = np.where(valid[t - 1], out[t - 1], inf)
        prev_min = prev_cost.min(axis=1, keepdims=True)
        best = prev_cost.copy()
        np.minimum(best[:, 1:], prev_cost[:, :-1] + p1[t, :, 1:], out=best[:, 1:])
        np.minimum(best[:, :-1], prev_cost[:, 1:] + p1[t, :, :-1], out=best[:, :-1])
        np.minimum(best, prev_min + p2[t], out=best)
        restart = ~np.isfinite(prev_min)  # previous pixel has no valid entry
        step = np.where(restart, c[t], c[t] - prev_min + best)
        out[t] = np.where(valid[t], step, INVALID_COST)
    return out


def _from_scan(a: np.ndarray, direction: tuple[int, int]) -> np.ndarray:
    dx, dy = direction
    if dx != 0:
        a = a[::-1] if dx < 0 else a
        return np.swapaxes(a, 0, 1)
    return a[::-1] if dy < 0 else a


def semiglobal(cost: np.ndarray, left, right, params: SgmParams) -> np.ndarray:
    """Average of the four directional sweeps."""
    total = None
    for r in DIRECTIONS:
        swept = sweep_direction(cost, left, right, r, params)
        total = swept if total is None else total + swept
    out = (total / np.float32(4)).astype(np.float32)
    out[np.asarray(cost) == INVALID_COST] = INVALID_COST
    return out
