"""Disparity extraction and refinement.

Winner-takes-all, left-right consistency labelling, interpolation of
inconsistent pixels, parabola subpixel enhancement, a 5x5 median filter and
an intensity-gated bilateral filter.
"""

from __future__ import annotations

import math

import numpy as np

from .costs import INVALID_COST
from .imaging import INVALID_DISPARITY, as_image

CORRECT = 0
MISMATCH = 1
OCCLUSION = 2

NUM_RAYS = 16


def wta(cost: np.ndarray) -> np.ndarray:
    """Per-pixel argmin over disparities; ties go to the smaller disparity."""
    cost = np.asarray(cost)
    disp = np.argmin(cost, axis=2).astype(np.float32)
    disp[(cost == INVALID_COST).all(axis=2)] = INVALID_DISPARITY
    return disp


def _consistent(dr: np.ndarray, d: np.ndarray) -> np.ndarray:
    # |d - D_R(x - d)| <= 1 with out-of-frame or invalid lookups failing
    h, w = dr.shape
    xr = np.arange(w)[None, :] - d
    inside = (d >= 0) & (xr >= 0) & (xr < w)
    ref = dr[np.arange(h)[:, None], np.clip(xr, 0, w - 1)]
    return inside & (ref >= 0) & (np.abs(d - ref) <= 1)


def lr_check(dl: np.ndarray, dr: np.ndarray, max_disparity: int) -> np.ndarray:
    """Label every pixel CORRECT, MISMATCH or OCCLUSION, rules applied in order.

    ``dl`` is the left-reference map, ``dr`` the right-reference map (indexed
    by right-image pixels). Disparities are rounded to the nearest integer
    for the lookup.
    """
    dl = np.asarray(dl, dtype=np.float64)
    dr = np.asarray(dr, dtype=np.float64)
    if dl.shape != dr.shape:
        raise ValueError(f"disparity maps differ in size: {dl.shape} vs {dr.shape}")
    d_own = np.where(dl >= 0, np.floor(dl + 0.5), -1).astype(np.int64)
    labels = np.full(dl.shape, OCCLUSION, dtype=np.int8)
    any_other = np.zeros(dl.shape, dtype=bool)
    for d in range(max_disparity):
        dd = np.full(dl.shape, d, dtype=np.int64)
        any_other |= _consistent(dr, dd) & (dd != d_own)
    labels[any_other] = MISMATCH
    labels[_consistent(dr, d_own)] = CORRECT
    return labels


def ray_offsets(max_len: int) -> list[list[tuple[int, int]]]:
    """Integer ``(dy, dx)`` steps along 16 rays at angles ``2*pi*k/16``."""
    rays = []
    for k in range(NUM_RAYS):
        theta = 2 * math.pi * k / NUM_RAYS
        c, s = math.cos(theta), math.sin(theta)
        rays.append([(math.floor(t * s + 0.5), math.floor(t * c + 0.5)) for t in range(1, max_len + 1)])
    return rays


def _ray_median(disp: np.ndarray, correct: np.ndarray, y: int, x: int, rays) -> float | None:
    h, w = disp.shape
    hits = []
    for ray in rays:
        for dy, dx in ray:
            yy, xx = y + dy, x + dx
            if not (0 <= yy < h and 0 <= xx < w):
                break
            if correct[yy, xx]:
                hits.append(disp[yy, xx])
                break
    return float(np.median(hits)) if hits else None


def _scan_row(disp: np.ndarray, correct: np.ndarray, y: int, x: int) -> float | None:
    row = correct[y]
    for xx in range(x - 1, -1, -1):
        if row[xx]:
            return float(disp[y, xx])
    for xx in range(x + 1, disp.shape[1]):
        if row[xx]:
            return float(disp[y, xx])
    return None


def interpolate(disp: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Fill occluded and mismatched pixels from nearby correct ones.

    Occlusions take the first correct value to the left (then to the right);
    mismatches take the median of the first correct value hit along each of
    16 rays. Each rule falls back on the other when it finds nothing, and a
    pixel with neither keeps its value.
    """
    disp = np.asarray(disp, dtype=np.float32)
    labels = np.asarray(labels)
    if disp.shape != labels.shape:
        raise ValueError("labels and disparity map differ in size")
    correct = labels == CORRECT
    if not correct.any():
        raise ValueError("no correct pixel to interpolate from")
    out = disp.copy()
    rays = ray_offsets(int(math.ceil(math.hypot(*disp.shape))) + 1)
    for y, x in zip(*np.nonzero(~correct)):
        if labels[y, x] == OCCLUSION:
            value = _scan_row(disp, correct, y, x)
            if value is None:
                value = _ray_median(disp, correct, y, x, rays)
        else:
            value = _ray_median(disp, correct, y, x, rays)
            if value is None:
                value = _scan_row(disp, correct, y, x)
        if value is not None:
            out[y, x] = value
    return out


def subpixel(disp: np.ndarray, cost: np.ndarray) -> np.ndarray:
    """Vertex of the parabola through the costs at ``d - 1``, ``d``, ``d + 1``.

    Pixels keep their disparity when it is invalid, not an integer, at either
    end of the range, next to an invalid cost, or when the curvature
    denominator is below 1e-9 in magnitude.
    """
    disp = np.asarray(disp, dtype=np.float32)
    cost = np.asarray(cost, dtype=np.float64)
    h, w, dmax = cost.shape
    d = np.rint(disp).astype(np.int64)
    ok = (disp >= 0) & (disp == d) & (d >= 1) & (d <= dmax - 2)
    di = np.clip(d, 1, max(dmax - 2, 1))
    yy, xx = np.indices((h, w))
    c_minus = cost[yy, xx, np.clip(di - 1, 0, dmax - 1)]
    c_mid = cost[yy, xx, np.clip(di, 0, dmax - 1)]
    c_plus = cost[yy, xx, np.clip(di + 1, 0, dmax - 1)]
    ok &= (c_minus != INVALID_COST) & (c_mid != INVALID_COST) & (c_plus != INVALID_COST)
    den = 2.0 * (c_plus - 2.0 * c_mid + c_minus)
    ok &= np.abs(den) >= 1e-9
    offset = np.divide(c_plus - c_minus, den, out=np.zeros_like(den), where=ok)
    return np.where(ok, d - offset, disp).astype(np.float32)


def median5(disp: np.ndarray) -> np.ndarray:
    """5x5 median with clamp-to-edge; invalid pixels are skipped and kept."""
    disp = np.asarray(disp, dtype=np.float32)
    h, w = disp.shape
    vals = np.where(disp >= 0, disp, np.nan).astype(np.float64)
    rows = np.clip(np.arange(-2, h + 2), 0, h - 1)
    cols = np.clip(np.arange(-2, w + 2), 0, w - 1)
    padded = vals[rows][:, cols]
    windows = np.lib.stride_tricks.sliding_window_view(padded, (5, 5)).reshape(h, w, 25)
    out = disp.copy()
    valid = disp >= 0
    if valid.any():
        out[valid] = np.nanmedian(windows[valid], axis=1)
    return out


def bilateral(disp: np.ndarray, left, sigma: float, threshold: float) -> np.ndarray:
    """Gaussian-weighted mean over neighbours with similar left intensity.

    The window radius is ``ceil(3 * sigma)``; neighbours outside the image or
    with invalid disparity are excluded.
    """
    disp = np.asarray(disp, dtype=np.float32)
    left = as_image(left).astype(np.float64)
    if disp.shape != left.shape:
        raise ValueError("disparity map and image differ in size")
    radius = int(math.ceil(3 * sigma))
    h, w = disp.shape
    dpad = np.pad(disp.astype(np.float64), radius, mode="constant", constant_values=-1.0)
    ipad = np.pad(left, radius, mode="constant", constant_values=np.nan)
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            # unnormalized Gaussian; the constant cancels against den
            g = math.exp(-(dy * dy + dx * dx) / (2 * sigma * sigma))
            dq = dpad[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            iq = ipad[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            with np.errstate(invalid="ignore"):
                gate = (np.abs(left - iq) < threshold) & (dq >= 0)
            num += np.where(gate, g * dq, 0.0)
            den += np.where(gate, g, 0.0)
    valid = disp >= 0
    out = disp.copy()
    out[valid] = (num[valid] / den[valid]).astype(np.float32)
    return out
