"""Positive and negative training pairs cut from ground-truth disparity maps."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..imaging import as_image, normalize
from .augment import IDENTITY_AUGMENT, AugmentParams, PatchTransform, apply_transform, sample_transform

POSITIVE = 1
NEGATIVE = 0


@dataclass(frozen=True)
class PatchPairExample:
    left_patch: np.ndarray
    right_patch: np.ndarray
    label: int
    x: int
    y: int
    d: float
    o: float
    left_source: np.ndarray | None = None
    right_source: np.ndarray | None = None
    right_shift: float = 0.0

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE


@dataclass
class PatchPairDataset:
    """Examples stored as source crops; positives and negatives alternate.

    Example ``2k`` is the positive and ``2k + 1`` the negative drawn at the
    same left-image position, so pair ``k`` is a unit for the hinge loss.
    """

    patch_size: int
    left_src: np.ndarray  # (N, S, S)
    right_src: np.ndarray  # (N, S, S)
    right_shift: np.ndarray  # (N,) fractional x offset of the right centre
    labels: np.ndarray  # (N,) int8
    positions: np.ndarray  # (N, 2) as (x, y)
    disparities: np.ndarray  # (N,)
    offsets: np.ndarray  # (N,)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_pairs(self) -> int:
        return len(self.labels) // 2

    @property
    def source_size(self) -> int:
        return self.left_src.shape[1]

    def patches(self, idx=None, transform: PatchTransform | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Left and right ``(k, n, n)`` patches, optionally augmented."""
        idx = np.arange(len(self)) if idx is None else np.asarray(idx)
        return apply_transform(
            self.left_src[idx], self.right_src[idx], self.patch_size, transform, self.right_shift[idx]
        )

    def example(self, i: int) -> PatchPairExample:
        left, right = self.patches([i])
        return PatchPairExample(
            left_patch=left[0],
            right_patch=right[0],
            label=int(self.labels[i]),
            x=int(self.positions[i, 0]),
            y=int(self.positions[i, 1]),
            d=float(self.disparities[i]),
            o=float(self.offsets[i]),
            left_source=self.left_src[i],
            right_source=self.right_src[i],
            right_shift=float(self.right_shift[i]),
        )

    def select_pairs(self, pair_idx) -> "PatchPairDataset":
        pair_idx = np.asarray(pair_idx, dtype=np.int64)
        idx = np.stack([2 * pair_idx, 2 * pair_idx + 1], axis=1).reshape(-1)
        return PatchPairDataset(
            self.patch_size,
            self.left_src[idx],
            self.right_src[idx],
            self.right_shift[idx],
            self.labels[idx],
            self.positions[idx],
            self.disparities[idx],
            self.offsets[idx],
        )

    @classmethod
    def concatenate(cls, parts: list["PatchPairDataset"]) -> "PatchPairDataset":
        if not parts:
            raise ValueError("nothing to concatenate")
        sizes = {(p.patch_size, p.source_size) for p in parts}
        if len(sizes) != 1:
            raise ValueError("datasets differ in patch or source size")
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
        return cls(
            parts[0].patch_size,
            cat("left_src"),
            cat("right_src"),
            cat("right_shift"),
            cat("labels"),
            cat("positions"),
            cat("disparities"),
            cat("offsets"),
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "wb") as f:
            np.savez(
                f,
                patch_size=np.int64(self.patch_size),
                left_src=self.left_src,
                right_src=self.right_src,
                right_shift=self.right_shift,
                labels=self.labels,
                positions=self.positions,
                disparities=self.disparities,
                offsets=self.offsets,
            )

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PatchPairDataset":
        with open(path, "rb") as f, np.load(f) as z:
            return cls(
                int(z["patch_size"]),
                z["left_src"],
                z["right_src"],
                z["right_shift"],
                z["labels"],
                z["positions"],
                z["disparities"],
                z["offsets"],
            )


def augment_pair(example: PatchPairExample, params: AugmentParams, rng: np.random.Generator) -> PatchPairExample:
    """Re-cut an example's patches under freshly drawn augmentation values."""
    if example.left_source is None or example.right_source is None:
        raise ValueError("example carries no source crops to augment")
    n = example.left_patch.shape[0]
    needed = 2 * params.guard_radius(n) + 1
    if example.left_source.shape[0] < needed:
        raise ValueError(f"source crop {example.left_source.shape[0]} too small for these ranges (need {needed})")
    t = sample_transform(params, rng, 1)
    left, right = apply_transform(
        example.left_source[None], example.right_source[None], n, t, np.array([example.right_shift])
    )
    return PatchPairExample(
        left[0], right[0], example.label, example.x, example.y, example.d, example.o,
        example.left_source, example.right_source, example.right_shift,
    )


def extract_examples(
    left,
    right,
    gt,
    patch_size: int,
    dataset_pos: float,
    dataset_neg_low: float,
    dataset_neg_high: float,
    rng: np.random.Generator,
    augment: AugmentParams = IDENTITY_AUGMENT,
    mask: np.ndarray | None = None,
) -> PatchPairDataset:
    """One positive and one negative example at every usable ground-truth pixel.

    Images are normalized first. A pixel is usable when its ground truth is
    valid (and inside ``mask`` if given) and every crop it can produce stays
    inside both images. The positive right centre is ``x - d + o`` with ``o``
    uniform in ``[-dataset_pos, dataset_pos]``; the negative uses ``|o|``
    uniform in ``[dataset_neg_low, dataset_neg_high]`` with a fair random sign.
    """
    left = normalize(as_image(left))
    right = normalize(as_image(right))
    gt = np.asarray(gt, dtype=np.float64)
    if left.shape != right.shape or gt.shape != left.shape:
        raise ValueError("images and ground truth differ in size")
    if not (0 <= dataset_pos and 0 <= dataset_neg_low <= dataset_neg_high):
        raise ValueError("offset ranges must satisfy 0 <= neg_low <= neg_high and pos >= 0")
    valid = np.isfinite(gt) & (gt >= 0)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    if not valid.any():
        raise ValueError("ground truth has no valid pixel")

    h, w = left.shape
    radius = augment.guard_radius(patch_size)
    reach = max(dataset_pos, dataset_neg_high) + 1
    ys, xs = np.nonzero(valid)
    d = gt[ys, xs]
    usable = (
        (ys >= radius) & (ys < h - radius)
        & (xs >= radius) & (xs < w - radius)
        & (xs - d - reach >= radius) & (xs - d + reach <= w - 1 - radius)
    )
    ys, xs, d = ys[usable], xs[usable], d[usable]
    n = len(ys)
    if n == 0:
        raise ValueError("no ground-truth pixel far enough from the border")

    o_pos = rng.uniform(-dataset_pos, dataset_pos, size=n) if dataset_pos > 0 else np.zeros(n)
    mag = rng.uniform(dataset_neg_low, dataset_neg_high, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    o_neg = sign * mag
    offsets = np.stack([o_pos, o_neg], axis=1).reshape(-1)
    xs2 = np.repeat(xs, 2)
    ys2 = np.repeat(ys, 2)
    d2 = np.repeat(d, 2)

    xr = xs2 - d2 + offsets
    xr0 = np.floor(xr + 0.5).astype(np.int64)
    shift = xr - xr0

    size = 2 * radius + 1
    win = np.arange(-radius, radius + 1)
    rows = (ys2[:, None] + win)[:, :, None]
    left_src = left[rows, (xs2[:, None] + win)[:, None, :]]
    right_src = right[rows, (xr0[:, None] + win)[:, None, :]]
    labels = np.tile(np.array([POSITIVE, NEGATIVE], dtype=np.int8), n)
    return PatchPairDataset(
        patch_size=patch_size,
        left_src=left_src.reshape(-1, size, size).astype(np.float32),
        right_src=right_src.reshape(-1, size, size).astype(np.float32),
        right_shift=shift.astype(np.float32),
        labels=labels,
        positions=np.stack([xs2, ys2], axis=1).astype(np.int32),
        disparities=d2.astype(np.float32),
        offsets=offsets.astype(np.float32),
    )
