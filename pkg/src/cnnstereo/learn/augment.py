"""Random geometric and photometric augmentation of training patch pairs.

Patches are cut from larger source crops by an inverse-mapped affine warp
with bilinear sampling, so rotated or sheared patches never read outside the
crop. Coordinates are ``(x, y)`` with ``y`` pointing down; a positive rotation
turns the patch content counterclockwise as displayed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

Range = tuple[float, float]


@dataclass(frozen=True)
class AugmentParams:
    """Sampling ranges; a degenerate range ``(a, a)`` fixes the value."""

    rotate: Range = (0.0, 0.0)
    scale: Range = (1.0, 1.0)
    horizontal_scale: Range = (1.0, 1.0)
    horizontal_shear: Range = (0.0, 0.0)
    brightness: Range = (0.0, 0.0)
    contrast: Range = (1.0, 1.0)
    vertical_disparity: Range = (0.0, 0.0)
    rotate_diff: Range = (0.0, 0.0)
    scale_diff: Range = (1.0, 1.0)
    horizontal_scale_diff: Range = (1.0, 1.0)
    horizontal_shear_diff: Range = (0.0, 0.0)
    brightness_diff: Range = (0.0, 0.0)
    contrast_diff: Range = (1.0, 1.0)

    def __post_init__(self):
        for f in dataclasses.fields(self):
            lo, hi = getattr(self, f.name)
            if not lo <= hi:
                raise ValueError(f"{f.name} range ({lo}, {hi}) is not ordered")
            object.__setattr__(self, f.name, (float(lo), float(hi)))
        for name in ("scale", "horizontal_scale", "contrast", "scale_diff", "horizontal_scale_diff", "contrast_diff"):
            if getattr(self, name)[0] <= 0:
                raise ValueError(f"{name} must stay positive")

    @property
    def is_identity(self) -> bool:
        return self == IDENTITY_AUGMENT

    def guard_radius(self, patch_size: int) -> int:
        """Source-crop radius that contains every sample of any allowed warp."""
        r = (patch_size - 1) / 2
        min_scale = (
            self.scale[0] * self.scale_diff[0] * self.horizontal_scale[0] * self.horizontal_scale_diff[0]
        )
        max_shear = max(abs(v) for v in self.horizontal_shear) + max(abs(v) for v in self.horizontal_shear_diff)
        rotates = any(v != 0 for v in self.rotate + self.rotate_diff)
        corner = math.sqrt(2) if rotates else 1.0
        reach = r * corner * (1 + max_shear) / min(min_scale, 1.0)
        shift = max(abs(v) for v in self.vertical_disparity)
        # one extra pixel for the bilinear neighbour, one for fractional centres
        return int(math.ceil(reach + shift)) + 2


IDENTITY_AUGMENT = AugmentParams()

KITTI_AUGMENT = AugmentParams(
    rotate=(-7, 7),
    horizontal_scale=(0.9, 1),
    horizontal_shear=(0, 0.1),
    brightness=(0, 0.7),
    contrast=(1, 1.3),
    brightness_diff=(0, 0.3),
)

MIDDLEBURY_AUGMENT = AugmentParams(
    rotate=(-28, 28),
    scale=(0.8, 1),
    horizontal_scale=(0.8, 1),
    horizontal_shear=(0, 0.1),
    brightness=(0, 1.3),
    contrast=(1, 1.1),
    vertical_disparity=(0, 1),
    rotate_diff=(-3, 3),
    horizontal_scale_diff=(0.9, 1),
    horizontal_shear_diff=(0, 0.3),
    brightness_diff=(0, 0.7),
    contrast_diff=(1, 1.1),
)


@dataclass(frozen=True)
class PatchTransform:
    """Drawn values for a batch of pairs; every field is an ``(N,)`` array."""

    rotate: np.ndarray
    scale: np.ndarray
    horizontal_scale: np.ndarray
    horizontal_shear: np.ndarray
    brightness: np.ndarray
    contrast: np.ndarray
    vertical_disparity: np.ndarray
    rotate_diff: np.ndarray
    scale_diff: np.ndarray
    horizontal_scale_diff: np.ndarray
    horizontal_shear_diff: np.ndarray
    brightness_diff: np.ndarray
    contrast_diff: np.ndarray

    def __len__(self) -> int:
        return len(self.rotate)

    def left_matrix(self) -> np.ndarray:
        return affine_matrix(self.rotate, self.scale, self.horizontal_scale, self.horizontal_shear)

    def right_matrix(self) -> np.ndarray:
        return affine_matrix(
            self.rotate + self.rotate_diff,
            self.scale * self.scale_diff,
            self.horizontal_scale * self.horizontal_scale_diff,
            self.horizontal_shear + self.horizontal_shear_diff,
        )


def sample_transform(params: AugmentParams, rng: np.random.Generator, n: int) -> PatchTransform:
    """Draw ``n`` independent parameter sets, uniform over each range."""
    values = {}
    for f in dataclasses.fields(AugmentParams):
        lo, hi = getattr(params, f.name)
        values[f.name] = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    return PatchTransform(**values)


def fixed_transform(n: int = 1, **values) -> PatchTransform:
    """Transform with explicit values (identity for anything not given)."""
    base = {f.name: getattr(IDENTITY_AUGMENT, f.name)[0] for f in dataclasses.fields(AugmentParams)}
    unknown = set(values) - set(base)
    if unknown:
        raise TypeError(f"unknown transform fields: {sorted(unknown)}")
    base.update(values)
    return PatchTransform(**{k: np.full(n, float(v)) for k, v in base.items()})


def affine_matrix(rotate_deg, scale, horizontal_scale, horizontal_shear) -> np.ndarray:
    """Forward ``(N, 2, 2)`` maps: rotate, then scale, then shear horizontally."""
    t = np.radians(np.asarray(rotate_deg, dtype=np.float64))
    c, s = np.cos(t), np.sin(t)
    # counterclockwise on screen with y pointing down
    rot = np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)
    sx = np.asarray(scale) * np.asarray(horizontal_scale)
    sy = np.asarray(scale) * np.ones_like(sx)
    zeros = np.zeros_like(sx)
    stretch = np.stack([np.stack([sx, zeros], -1), np.stack([zeros, sy], -1)], -2)
    sh = np.asarray(horizontal_shear) * np.ones_like(sx)
    shear = np.stack([np.stack([np.ones_like(sh), sh], -1), np.stack([zeros, np.ones_like(sh)], -1)], -2)
    return shear @ stretch @ rot


def warp_patches(
    src: np.ndarray,
    forward: np.ndarray | None,
    patch_size: int,
    center_shift: np.ndarray | None = None,
    translate: np.ndarray | None = None,
) -> np.ndarray:
    """Sample ``(N, n, n)`` patches from ``(N, S, S)`` source crops.

    Output offset ``u`` (relative to the patch centre) reads the source at
    ``centre + center_shift + forward^-1 (u - translate)``; both extra terms
    are ``(N, 2)`` in ``(x, y)`` order.
    """
    src = np.asarray(src)
    n_ex, size, _ = src.shape
    r = (patch_size - 1) / 2
    grid = np.arange(patch_size) - r
    u = np.stack(np.meshgrid(grid, grid, indexing="xy"), -1).reshape(-1, 2)  # (P, 2) as (x, y)
    pts = np.broadcast_to(u, (n_ex,) + u.shape).astype(np.float64)
    if translate is not None:
        pts = pts - np.asarray(translate, dtype=np.float64)[:, None, :]
    if forward is not None:
        inv = np.linalg.inv(forward)
        pts = np.einsum("nij,npj->npi", inv, pts)
    c = (size - 1) / 2
    pts = pts + c
    if center_shift is not None:
        pts = pts + np.asarray(center_shift, dtype=np.float64)[:, None, :]
    # remove round-off so that exact grid positions sample without blending
    snapped = np.rint(pts)
    pts = np.where(np.abs(pts - snapped) < 1e-9, snapped, pts)
    return bilinear(src, pts[..., 0], pts[..., 1]).reshape(n_ex, patch_size, patch_size)


def bilinear(src: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear lookup of ``src[n]`` at ``(x[n, p], y[n, p])``, clamped to the crop."""
    n_ex, h, w = src.shape
    x = np.clip(x, 0, w - 1)
    y = np.clip(y, 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), w - 2) if w > 1 else np.zeros(x.shape, np.int64)
    y0 = np.minimum(np.floor(y).astype(np.int64), h - 2) if h > 1 else np.zeros(y.shape, np.int64)
    fx = x - x0
    fy = y - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    idx = np.arange(n_ex)[:, None]
    s = src.astype(np.float64)
    top = s[idx, y0, x0] * (1 - fx) + s[idx, y0, x1] * fx
    bottom = s[idx, y1, x0] * (1 - fx) + s[idx, y1, x1] * fx
    return (top * (1 - fy) + bottom * fy).astype(src.dtype)


def apply_transform(
    left_src: np.ndarray,
    right_src: np.ndarray,
    patch_size: int,
    transform: PatchTransform | None,
    right_shift: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Warp and photometrically adjust a batch of pairs.

    ``right_shift`` is the fractional horizontal offset of each right patch
    centre from the centre of its source crop.
    """
    n_ex = len(left_src)
    shift = np.zeros((n_ex, 2))
    if right_shift is not None:
        shift[:, 0] = right_shift
    if transform is None:
        return (
            warp_patches(left_src, None, patch_size),
            warp_patches(right_src, None, patch_size, center_shift=shift),
        )
    t = transform
    translate = np.zeros((n_ex, 2))
    translate[:, 1] = t.vertical_disparity
    left = warp_patches(left_src, t.left_matrix(), patch_size)
    right = warp_patches(right_src, t.right_matrix(), patch_size, center_shift=shift, translate=translate)
    col = (slice(None), None, None)
    left = left * t.contrast[col] + t.brightness[col]
    right = right * (t.contrast * t.contrast_diff)[col] + (t.brightness + t.brightness_diff)[col]
    return left.astype(left_src.dtype), right.astype(right_src.dtype)
