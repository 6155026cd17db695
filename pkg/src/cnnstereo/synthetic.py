"""Random-dot stereograms with exact integer ground truth.

A scene is a background plane plus a few fronto-parallel rectangles, each
with its own dot texture and disparity. Nearer layers (larger disparity)
hide farther ones. Independent sensor noise is added to each image after
rendering, so a matching cost has to look past per-pixel differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticPair:
    left: np.ndarray
    right: np.ndarray
    gt: np.ndarray  # left-image disparity, float32
    nonocc: np.ndarray  # bool: point also visible in the right image

    @property
    def max_disparity(self) -> int:
        return int(self.gt.max()) + 1


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3 * sigma)))
    x = np.arange(-radius, radius + 1)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return img
    k = _gaussian_kernel(sigma)
    r = len(k) // 2
    out = np.pad(img, ((0, 0), (r, r)), mode="wrap")
    out = np.apply_along_axis(lambda v: np.convolve(v, k, mode="valid"), 1, out)
    out = np.pad(out, ((r, r), (0, 0)), mode="wrap")
    return np.apply_along_axis(lambda v: np.convolve(v, k, mode="valid"), 0, out)


def dot_texture(rng: np.random.Generator, height: int, width: int, density: float = 0.5, blur: float = 0.7) -> np.ndarray:
    """Binary random dots, lightly blurred and rescaled to ``[0, 1]``."""
    dots = (rng.random((height, width)) < density).astype(np.float64)
    tex = _blur(dots, blur)
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo) if hi > lo else tex


def random_dot_stereogram(
    rng: np.random.Generator,
    height: int = 48,
    width: int = 64,
    max_disparity: int = 12,
    num_rects: int = 3,
    noise: float = 0.1,
    density: float = 0.5,
    blur: float = 0.7,
    contrast: float = 0.3,
    layer_spread: float = 0.6,
) -> SyntheticPair:
    """Render one pair; ``gt`` values lie in ``[0, max_disparity - 1]``."""
    if max_disparity < 2:
        raise ValueError("max_disparity must be at least 2")
    wide = width + max_disparity
    d_bg = int(rng.integers(0, max(1, max_disparity // 3)))
    layers = [(d_bg, np.zeros(2, int), np.array([height, wide]))]
    for _ in range(num_rects):
        d = int(rng.integers(d_bg + 1, max_disparity)) if d_bg + 1 < max_disparity else d_bg
        rh = int(rng.integers(height // 5, height // 2 + 1))
        rw = int(rng.integers(width // 5, width // 2 + 1))
        y0 = int(rng.integers(0, height - rh + 1))
        x0 = int(rng.integers(0, width - rw + 1))
        layers.append((d, np.array([y0, x0]), np.array([y0 + rh, x0 + rw])))
    layers.sort(key=lambda layer: layer[0])
    # each layer gets its own brightness so depth edges are also intensity edges
    means = 0.5 + layer_spread * (rng.permutation(len(layers)) / max(len(layers) - 1, 1) - 0.5)
    textures = [
        m + contrast * (dot_texture(rng, height, wide + max_disparity, density, blur) - 0.5) for m in means
    ]

    xs = np.arange(width)
    ys = np.arange(height)[:, None]
    left = np.zeros((height, width))
    right = np.zeros((height, width))
    gt = np.zeros((height, width))
    layer_l = np.zeros((height, width), dtype=int)
    layer_r = np.zeros((height, width), dtype=int)
    for k, ((d, lo, hi), tex) in enumerate(zip(layers, textures)):
        # footprint in left coordinates; the right image sees it shifted by -d
        cover_l = (ys >= lo[0]) & (ys < hi[0]) & (xs >= lo[1]) & (xs < hi[1])
        cover_r = (ys >= lo[0]) & (ys < hi[0]) & (xs + d >= lo[1]) & (xs + d < hi[1])
        tex_l = tex[:, xs + max_disparity]
        tex_r = tex[:, xs + d + max_disparity]
        left = np.where(cover_l, tex_l, left)
        right = np.where(cover_r, tex_r, right)
        gt = np.where(cover_l, d, gt)
        layer_l = np.where(cover_l, k, layer_l)
        layer_r = np.where(cover_r, k, layer_r)

    xr = xs[None, :] - gt.astype(int)
    inside = xr >= 0
    seen = layer_r[np.arange(height)[:, None], np.clip(xr, 0, width - 1)]
    nonocc = inside & (seen == layer_l)

    left = left + noise * rng.standard_normal(left.shape)
    right = right + noise * rng.standard_normal(right.shape)
    return SyntheticPair(
        left=np.clip(left, 0, 1).astype(np.float32),
        right=np.clip(right, 0, 1).astype(np.float32),
        gt=gt.astype(np.float32),
        nonocc=nonocc,
    )
