"""Cross-based cost aggregation.

Every pixel gets an upright cross of four arms. An arm grows while the
intensity stays within ``intensity`` of the anchor and the distance stays
below ``distance``. The support region of ``p`` is the union of the
horizontal arms of every pixel on ``p``'s vertical arm. For disparity ``d``
the combined region keeps the pixels ``q`` whose partner ``q - d`` also lies
in the right image's support region of ``p - d``.

Because both horizontal arms are anchored on the same image column, the
combined region is again cross shaped: rows span the intersection of the two
vertical arms, and on each row the columns span the intersection of the two
horizontal arms anchored there. Aggregation therefore reduces to a
horizontal running sum followed by a vertical running sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import INVALID_COST
from .imaging import as_image


@dataclass(frozen=True)
class CrossArms:
    """Arm lengths in pixels, each an int array of shape ``(height, width)``."""

    left: np.ndarray
    right: np.ndarray
    top: np.ndarray
    bottom: np.ndarray

    def flipped(self) -> "CrossArms":
        """Arms of the horizontally mirrored image."""
        return CrossArms(
            left=self.right[:, ::-1].copy(),
            right=self.left[:, ::-1].copy(),
            top=self.top[:, ::-1].copy(),
            bottom=self.bottom[:, ::-1].copy(),
        )


def _arm(img: np.ndarray, intensity: float, distance: int, dy: int, dx: int) -> np.ndarray:
    h, w = img.shape
    length = np.zeros((h, w), dtype=np.int32)
    alive = np.ones((h, w), dtype=bool)
    for step in range(1, distance):
        ys = np.arange(h)[:, None] + dy * step
        xs = np.arange(w)[None, :] + dx * step
        inside = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        other = img[np.clip(ys, 0, h - 1), np.clip(xs, 0, w - 1)]
        alive &= inside & (np.abs(img - other) < intensity)
        if not alive.any():
            break
        length += alive
    return length


def compute_arms(img, intensity: float, distance: int) -> CrossArms:
    img = as_image(img)
    return CrossArms(
        left=_arm(img, intensity, distance, 0, -1),
        right=_arm(img, intensity, distance, 0, 1),
        top=_arm(img, intensity, distance, -1, 0),
        bottom=_arm(img, intensity, distance, 1, 0),
    )


def _interval_sum(prefix: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int) -> np.ndarray:
    # prefix has a leading zero along `axis`; sum over [lo, hi] inclusive
    return np.take_along_axis(prefix, hi + 1, axis=axis) - np.take_along_axis(prefix, lo, axis=axis)


def _aggregate_once(cost: np.ndarray, arms_l: CrossArms, arms_r: CrossArms) -> np.ndarray:
    h, w, dmax = cost.shape
    out = cost.copy()
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    for d in range(min(dmax, w)):
        c = cost[:, d:, d].astype(np.float64)
        valid = c != INVALID_COST
        c = np.where(valid, c, 0.0)
        wd = w - d
        x = xs[:, :wd] + d  # left-image column of each anchor p
        sl = slice(d, w)
        sr = slice(0, wd)  # right-image column x - d
        left = np.minimum(arms_l.left[:, sl], arms_r.left[:, sr])
        right = np.minimum(arms_l.right[:, sl], arms_r.right[:, sr])
        top = np.minimum(arms_l.top[:, sl], arms_r.top[:, sr])
        bottom = np.minimum(arms_l.bottom[:, sl], arms_r.bottom[:, sr])

        # columns are indexed relative to d so that 0 is image column d
        pre = np.zeros((h, wd + 1))
        pre[:, 1:] = np.cumsum(c, axis=1)
        cnt = np.zeros((h, wd + 1))
        cnt[:, 1:] = np.cumsum(valid, axis=1)
        lo = x - d - left
        hi = x - d + right
        row_sum = _interval_sum(pre, lo, hi, axis=1)
        row_cnt = _interval_sum(cnt, lo, hi, axis=1)

        vpre = np.zeros((h + 1, wd))
        vpre[1:] = np.cumsum(row_sum, axis=0)
        vcnt = np.zeros((h + 1, wd))
        vcnt[1:] = np.cumsum(row_cnt, axis=0)
        lo = ys - top
        hi = ys + bottom
        total = _interval_sum(vpre, lo, hi, axis=0)
        count = _interval_sum(vcnt, lo, hi, axis=0)

        has = count > 0
        out[:, d:, d] = np.where(has, total / np.where(has, count, 1), cost[:, d:, d])
    return out


def aggregate(cost: np.ndarray, arms_l: CrossArms, arms_r: CrossArms, iterations: int) -> np.ndarray:
    """Average ``cost`` over the combined support regions, ``iterations`` times.

    Invalid entries are left out of every average; an entry whose region holds
    no valid cost keeps its previous value.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = np.asarray(cost, dtype=np.float32)
    for _ in range(iterations):
        out = _aggregate_once(out, arms_l, arms_r)
    return out
