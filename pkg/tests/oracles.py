"""Slow, direct reference implementations used as test oracles.

Each one follows the textbook definition pixel by pixel with plain loops and
shares no code with the package beyond constants.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from cnnstereo.costs import INVALID_COST


def _clamp(v, lo, hi):
    return min(max(v, lo), hi)


def sad_bruteforce(left, right, dmax, patch):
    h, w = left.shape
    r = patch // 2
    out = np.full((h, w, dmax), INVALID_COST, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for d in range(dmax):
                if x - d < 0:
                    continue
                s = 0.0
                for dy in range(-r, r + 1):
                    for dx in range(-r, r + 1):
                        yy = _clamp(y + dy, 0, h - 1)
                        s += abs(float(left[yy, _clamp(x + dx, 0, w - 1)]) - float(right[yy, _clamp(x + dx - d, 0, w - 1)]))
                out[y, x, d] = s
    return out


def census_bits_bruteforce(img, window):
    """List of per-pixel bit lists (row-major window order)."""
    h, w = img.shape
    r = window // 2
    bits = np.zeros((h, w, window * window), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            k = 0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    nb = img[_clamp(y + dy, 0, h - 1), _clamp(x + dx, 0, w - 1)]
                    bits[y, x, k] = 1 if img[y, x] > nb else 0
                    k += 1
    return bits


def census_bruteforce(left, right, dmax, window):
    bl = census_bits_bruteforce(left, window)
    br = census_bits_bruteforce(right, window)
    h, w = left.shape
    out = np.full((h, w, dmax), INVALID_COST, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for d in range(dmax):
                if x - d >= 0:
                    out[y, x, d] = int(np.sum(bl[y, x] != br[y, x - d]))
    return out


def ncc_bruteforce(left, right, dmax, window, eps=1e-12):
    h, w = left.shape
    r = window // 2
    out = np.full((h, w, dmax), INVALID_COST, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for d in range(dmax):
                if x - d < 0:
                    continue
                a, b = [], []
                for dy in range(-r, r + 1):
                    for dx in range(-r, r + 1):
                        yy = _clamp(y + dy, 0, h - 1)
                        a.append(float(left[yy, _clamp(x + dx, 0, w - 1)]))
                        b.append(float(right[yy, _clamp(x + dx - d, 0, w - 1)]))
                a, b = np.array(a), np.array(b)
                den = (a @ a) * (b @ b)
                if den > eps:
                    out[y, x, d] = -max(-1.0, min(1.0, (a @ b) / math.sqrt(den)))
    return out


def arm_bruteforce(img, intensity, distance, y, x, dy, dx):
    h, w = img.shape
    n = 0
    while True:
        step = n + 1
        yy, xx = y + dy * step, x + dx * step
        if step >= distance or not (0 <= yy < h and 0 <= xx < w):
            return n
        if not abs(float(img[y, x]) - float(img[yy, xx])) < intensity:
            return n
        n += 1


def arms_bruteforce(img, intensity, distance):
    h, w = img.shape
    out = {k: np.zeros((h, w), int) for k in ("left", "right", "top", "bottom")}
    for y in range(h):
        for x in range(w):
            out["left"][y, x] = arm_bruteforce(img, intensity, distance, y, x, 0, -1)
            out["right"][y, x] = arm_bruteforce(img, intensity, distance, y, x, 0, 1)
            out["top"][y, x] = arm_bruteforce(img, intensity, distance, y, x, -1, 0)
            out["bottom"][y, x] = arm_bruteforce(img, intensity, distance, y, x, 1, 0)
    return out


def support_region(arms, y, x):
    """Union of the horizontal arms of every pixel on p's vertical arm."""
    region = set()
    for yy in range(y - arms["top"][y, x], y + arms["bottom"][y, x] + 1):
        for xx in range(x - arms["left"][yy, x], x + arms["right"][yy, x] + 1):
            region.add((yy, xx))
    return region


def cbca_bruteforce(cost, arms_l, arms_r, iterations):
    """Average over U_d(p) = {q in U_L(p) : q - d in U_R(p - d)}, sentinel entries excluded."""
    h, w, dmax = cost.shape
    cur = cost.astype(np.float64).copy()
    regions_l = {(y, x): support_region(arms_l, y, x) for y in range(h) for x in range(w)}
    regions_r = {(y, x): support_region(arms_r, y, x) for y in range(h) for x in range(w)}
    for _ in range(iterations):
        nxt = cur.copy()
        for y in range(h):
            for x in range(w):
                for d in range(dmax):
                    if x - d < 0:
                        continue
                    ur = regions_r[(y, x - d)]
                    vals = [
                        cur[yy, xx, d]
                        for (yy, xx) in regions_l[(y, x)]
                        if (yy, xx - d) in ur and cur[yy, xx, d] != INVALID_COST
                    ]
                    if vals:
                        nxt[y, x, d] = sum(vals) / len(vals)
        cur = nxt
    return cur


def sgm_penalty(d1, d2, P1, P2, Q1, Q2, V, D, vertical):
    if d1 >= D and d2 >= D:
        p1, p2 = P1 / Q2, P2 / Q2
    elif d1 >= D or d2 >= D:
        p1, p2 = P1 / Q1, P2 / Q1
    else:
        p1, p2 = P1, P2
    if vertical:
        p1 /= V
    return p1, p2


def sgm_transition_penalties(left, right, params, direction, y, x, d):
    """(P1, P2) for entering pixel (y, x) at disparity d along direction r = (dx, dy)."""
    dx, dy = direction
    h, w = left.shape
    d1 = abs(float(left[y, x]) - float(left[y - dy, x - dx]))
    xr, xrp, yrp = x - d, x - d - dx, y - dy
    if xr >= 0 and 0 <= xrp < w and 0 <= yrp < h:
        d2 = abs(float(right[y, xr]) - float(right[yrp, xrp]))
    else:
        d2 = 0.0
    return sgm_penalty(d1, d2, params.P1, params.P2, params.Q1, params.Q2, params.V, params.D, dx == 0)


def sgm_sweep_reference(cost, left, right, params, direction):
    """Straight loops over the recurrence, skipping sentinel entries."""
    h, w, dmax = cost.shape
    dx, dy = direction
    out = np.full(cost.shape, np.nan)
    xs = range(w) if dx >= 0 else range(w - 1, -1, -1)
    ys = range(h) if dy >= 0 else range(h - 1, -1, -1)
    for y in ys:
        for x in xs:
            py, px = y - dy, x - dx
            first = not (0 <= py < h and 0 <= px < w)
            prev = None if first else [out[py, px, k] if cost[py, px, k] != INVALID_COST else math.inf for k in range(dmax)]
            prev_min = None if first else min(prev)
            for d in range(dmax):
                c = float(cost[y, x, d])
                if c == INVALID_COST:
                    out[y, x, d] = INVALID_COST
                    continue
                if first or prev_min == math.inf:
                    out[y, x, d] = c
                    continue
                p1, p2 = sgm_transition_penalties(left, right, params, direction, y, x, d)
                cands = [prev[d], prev_min + p2]
                if d > 0:
                    cands.append(prev[d - 1] + p1)
                if d < dmax - 1:
                    cands.append(prev[d + 1] + p1)
                out[y, x, d] = c + min(cands) - prev_min
    return out


def scanline_energy_bruteforce(cost_line, left_line, right_line, params):
    """Exhaustive minimum of the 1-D energy over assignments ending in each d.

    Returns ``best[d]`` for the final pixel (inf where unreachable) and the
    energy of every full assignment as a dict.
    """
    n, dmax = cost_line.shape
    left = left_line[None, :]
    right = right_line[None, :]
    choices = [[d for d in range(dmax) if cost_line[x, d] != INVALID_COST] for x in range(n)]
    best_end = [math.inf] * dmax
    energies = {}
    for assign in itertools.product(*choices):
        e = sum(float(cost_line[x, assign[x]]) for x in range(n))
        for x in range(1, n):
            jump = abs(assign[x] - assign[x - 1])
            if jump == 0:
                continue
            p1, p2 = sgm_transition_penalties(left, right, params, (1, 0), 0, x, assign[x])
            e += p1 if jump == 1 else p2
        energies[assign] = e
        best_end[assign[-1]] = min(best_end[assign[-1]], e)
    return best_end, energies


def network_volume_per_patch(spec, weights, left, right, dmax, describe, score):
    """Cost ``-s`` computed one patch pair at a time on interior pixels (NaN elsewhere)."""
    h, w = left.shape
    r = (spec.input_patch_size - 1) // 2
    out = np.full((h, w, dmax), np.nan)
    for y in range(r, h - r):
        for x in range(r, w - r):
            fl = describe(spec, weights, left[y - r : y + r + 1, x - r : x + r + 1])
            for d in range(dmax):
                if x - d - r < 0:
                    continue
                fr = describe(spec, weights, right[y - r : y + r + 1, x - d - r : x - d + r + 1])
                out[y, x, d] = -score(fl, fr)
    return out
