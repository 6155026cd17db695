"""Baseline matching costs and cost-volume utilities.

A cost volume is a float32 array of shape ``(height, width, max_disparity)``
indexed ``[y, x, d]``; lower values are better matches. Entries whose right
image centre ``x - d`` falls outside the frame hold ``INVALID_COST``.

Window sampling is clamp-to-edge in both images: the left image is read at
``clamp(q)`` and the right image at ``clamp(q - d)``.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .imaging import FormatError, TruncatedFileError, as_image

INVALID_COST = np.float32(1e9)
NCC_EPS = 1e-12
VOLUME_MAGIC = b"CVOL"


def _check_pair(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    left = as_image(left)
    right = as_image(right)
    if left.shape != right.shape:
        raise ValueError(f"image dimensions differ: {left.shape} vs {right.shape}")
    return left, right


def _check_window(size: int, name: str) -> int:
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"{name} must be a positive odd integer, got {size}")
    return size


def box_sum(a: np.ndarray, k: int) -> np.ndarray:
    """Sum over every k x k window of a 2-D array (valid mode), in float64."""
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(a, axis=0, dtype=np.float64), axis=1)
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def _clamped(img: np.ndarray, r: int, shift: int = 0) -> np.ndarray:
    # img[clamp(y), clamp(x - shift)] for y in [-r, h + r), x in [-r, w + r)
    h, w = img.shape
    rows = np.clip(np.arange(-r, h + r), 0, h - 1)
    cols = np.clip(np.arange(-r, w + r) - shift, 0, w - 1)
    return img[rows][:, cols].astype(np.float64)


def sad_volume(left, right, max_disparity: int, patch_size: int = 9) -> np.ndarray:
    """Sum of absolute differences over a ``patch_size`` square window."""
    left, right = _check_pair(left, right)
    patch_size = _check_window(patch_size, "patch_size")
    if max_disparity < 1:
        raise ValueError("max_disparity must be >= 1")
    h, w = left.shape
    r = patch_size // 2
    lp = _clamped(left, r)
    vol = np.full((h, w, max_disparity), INVALID_COST, dtype=np.float32)
    for d in range(min(max_disparity, w)):
        cost = box_sum(np.abs(lp - _clamped(right, r, d)), patch_size)
        vol[:, d:, d] = cost[:, d:]
    return vol


@dataclass(frozen=True)
class CensusField:
    """Packed census bit vectors.

    ``bits`` has shape ``(height, width, words)``; bit ``k`` of the row-major
    window lives in word ``k // 64`` at position ``k % 64``.
    """

    bits: np.ndarray
    window: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape[:2]


def census_transform(img, window: int = 9) -> CensusField:
    """Bit k is set iff the centre is strictly brighter than neighbour k."""
    img = as_image(img)
    window = _check_window(window, "window")
    h, w = img.shape
    r = window // 2
    nbits = window * window
    words = np.zeros((h, w, (nbits + 63) // 64), dtype=np.uint64)
    padded = _clamped(img, r)
    center = img.astype(np.float64)
    k = 0
    for dy in range(window):
        for dx in range(window):
            neighbour = padded[dy : dy + h, dx : dx + w]
            bit = (center > neighbour).astype(np.uint64) << np.uint64(k % 64)
            words[:, :, k // 64] |= bit
            k += 1
    return CensusField(words, window)


def hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamming distance between packed bit vectors along the last axis."""
    return np.bitwise_count(np.bitwise_xor(a, b)).sum(axis=-1, dtype=np.int64)


def census_volume(left: CensusField, right: CensusField, max_disparity: int) -> np.ndarray:
    if left.window != right.window:
        raise ValueError(f"census windows differ: {left.window} vs {right.window}")
    if left.shape != right.shape:
        raise ValueError(f"census fields differ in size: {left.shape} vs {right.shape}")
    if max_disparity < 1:
        raise ValueError("max_disparity must be >= 1")
    h, w = left.shape
    vol = np.full((h, w, max_disparity), INVALID_COST, dtype=np.float32)
    for d in range(min(max_disparity, w)):
        vol[:, d:, d] = hamming(left.bits[:, d:], right.bits[:, : w - d])
    return vol


def ncc_volume(left, right, max_disparity: int, window: int = 11) -> np.ndarray:
    """Negated normalized cross-correlation, so that -1 is a perfect match.

    Patches whose squared norms multiply to at most ``NCC_EPS`` get
    ``INVALID_COST``.
    """
    left, right = _check_pair(left, right)
    window = _check_window(window, "window")
    if max_disparity < 1:
        raise ValueError("max_disparity must be >= 1")
    h, w = left.shape
    r = window // 2
    lp = _clamped(left, r)
    ll = box_sum(lp * lp, window)
    vol = np.full((h, w, max_disparity), INVALID_COST, dtype=np.float32)
    for d in range(min(max_disparity, w)):
        rp = _clamped(right, r, d)
        lr = box_sum(lp * rp, window)
        den = ll * box_sum(rp * rp, window)
        ok = den > NCC_EPS
        ncc = np.divide(lr, np.sqrt(den, where=ok, out=np.ones_like(den)))
        cost = np.where(ok, -np.clip(ncc, -1.0, 1.0), INVALID_COST)
        vol[:, d:, d] = cost[:, d:]
    return vol


def valid_mask(cost: np.ndarray) -> np.ndarray:
    return cost != INVALID_COST


def right_reference(cost: np.ndarray) -> np.ndarray:
    """Cost volume for the right image as reference, mirrored horizontally.

    The right-reference cost is ``C_R(x, d) = C_L(x + d, d)``. Mirroring the
    x axis turns it into an ordinary left-reference problem on the flipped
    images ``(fliplr(right), fliplr(left))``: entry ``[y, x', d]`` holds
    ``C_L[y, w - 1 - x' + d, d]`` and is invalid for ``x' < d``.
    """
    h, w, dmax = cost.shape
    out = np.full_like(cost, INVALID_COST)
    for d in range(min(dmax, w)):
        # x' in [d, w): source column w - 1 - x' + d runs from w - 1 down to d
        out[:, d:, d] = cost[:, d:, d][:, ::-1]
    return out


def write_cost_volume(cost: np.ndarray, path: str | os.PathLike) -> None:
    """Dump a volume: magic, uint32 width/height/max_disparity, float32 payload."""
    h, w, dmax = cost.shape
    with open(path, "wb") as f:
        f.write(VOLUME_MAGIC + struct.pack("<3I", w, h, dmax))
        f.write(np.ascontiguousarray(cost, dtype="<f4").tobytes())


def read_cost_volume(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 16 or buf[:4] != VOLUME_MAGIC:
        raise FormatError("not a cost-volume dump")
    w, h, dmax = struct.unpack("<3I", buf[4:16])
    expected = w * h * dmax * 4
    if len(buf) - 16 < expected:
        raise TruncatedFileError("cost-volume payload is truncated")
    return np.frombuffer(buf[16 : 16 + expected], dtype="<f4").reshape(h, w, dmax).astype(np.float32)
