"""Minibatch training loop and finite-difference gradient verification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..net import ACCURATE, FAST, NetworkSpec, NetworkWeights, init_weights
from .augment import AugmentParams, sample_transform
from .backprop import BCE, HINGE, loss_and_grads, scores
from .dataset import PatchPairDataset
from .losses import sgd_momentum_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 14
    learning_rate: float = 0.002
    decay_epoch: int = 11
    decay_factor: float = 10.0
    momentum: float = 0.9
    batch_size: int = 128
    margin: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.decay_epoch, self.batch_size) < 1:
            raise ValueError("epochs, decay_epoch and batch_size must be positive")
        if self.learning_rate <= 0 or self.decay_factor <= 0 or self.margin <= 0:
            raise ValueError("learning rate, decay factor and margin must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.decay_epoch > self.epochs:
            raise ValueError("decay_epoch must not exceed epochs")
        if self.batch_size % 2:
            raise ValueError("batch_size must be even (pairs are kept together)")

    @classmethod
    def for_arch(cls, arch: str, **overrides) -> "TrainConfig":
        lr = 0.002 if arch == FAST else 0.003
        return cls(**{"learning_rate": lr, **overrides})

    def lr_at(self, epoch: int) -> float:
        """Learning rate of 1-based ``epoch``."""
        if epoch >= self.decay_epoch:
            return self.learning_rate / self.decay_factor
        return self.learning_rate


def default_loss(arch: str) -> str:
    return HINGE if arch == FAST else BCE


@dataclass
class TrainResult:
    weights: NetworkWeights
    epoch_losses: list[float] = field(default_factory=list)
    batch_losses: list[float] = field(default_factory=list)


def train(
    spec: NetworkSpec,
    dataset: PatchPairDataset,
    config: TrainConfig,
    augment: AugmentParams | None = None,
    callback: Callable[[int, float], None] | None = None,
    loss: str | None = None,
    weights: NetworkWeights | None = None,
) -> TrainResult:
    """Train from scratch (or from ``weights``) with shuffled pairs as units.

    Each presentation of an example draws new augmentation values.
    """
    if len(dataset) == 0:
        raise ValueError("training set is empty")
    if dataset.patch_size != spec.input_patch_size:
        raise ValueError(f"dataset patches are {dataset.patch_size}, network expects {spec.input_patch_size}")
    loss = loss or default_loss(spec.arch)
    rng = np.random.default_rng(config.seed)
    if weights is None:
        weights = init_weights(spec, rng)
    else:
        weights.check(spec)
        weights = weights.copy()
    params = weights.arrays()
    velocity = [np.zeros_like(p) for p in params]
    pairs_per_batch = config.batch_size // 2
    result = TrainResult(weights)

    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at(epoch)
        order = rng.permutation(dataset.num_pairs)
        total, count = 0.0, 0
        for start in range(0, len(order), pairs_per_batch):
            pair_idx = order[start : start + pairs_per_batch]
            idx = np.stack([2 * pair_idx, 2 * pair_idx + 1], axis=1).reshape(-1)
            transform = None
            if augment is not None and not augment.is_identity:
                transform = sample_transform(augment, rng, len(idx))
            left, right = dataset.patches(idx, transform)
            current = NetworkWeights.from_arrays(spec, params)
            value, grads = loss_and_grads(spec, current, left, right, dataset.labels[idx], loss, config.margin)
            params, velocity = sgd_momentum_step(params, grads, velocity, lr, config.momentum)
            result.batch_losses.append(value)
            total += value * len(pair_idx)
            count += len(pair_idx)
        mean = total / count
        result.epoch_losses.append(mean)
        log.info("epoch %d lr %.5g loss %.6f", epoch, lr, mean)
        if callback is not None:
            callback(epoch, mean)
    result.weights = NetworkWeights.from_arrays(spec, params)
    return result


def ranking_accuracy(spec: NetworkSpec, weights: NetworkWeights, dataset: PatchPairDataset, batch: int = 1024) -> float:
    """Fraction of pairs whose positive outscores the negative."""
    wins = 0
    for start in range(0, len(dataset), batch):
        idx = np.arange(start, min(start + batch, len(dataset)))
        left, right = dataset.patches(idx)
        s = scores(spec, weights, left, right)
        wins += int(np.sum(s[0::2] > s[1::2]))
    return wins / dataset.num_pairs


def gradient_check(
    spec: NetworkSpec,
    weights: NetworkWeights,
    left: np.ndarray,
    right: np.ndarray,
    labels: np.ndarray,
    loss: str | None = None,
    h: float = 1e-5,
    floor: float = 1e-6,
    margin: float = 0.2,
) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Everything runs in float64. The relative error of one entry is
    ``|a - n| / max(|a|, |n|, floor)``; the floor keeps entries whose true
    gradient is zero from dividing round-off by round-off.
    """
    loss = loss or default_loss(spec.arch)
    w64 = weights.astype(np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    labels = np.asarray(labels)
    _, analytic = loss_and_grads(spec, w64, left, right, labels, loss, margin)
    params = w64.arrays()
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_and_grads(spec, w64, left, right, labels, loss, margin)[0]
            flat[i] = orig - h
            down = loss_and_grads(spec, w64, left, right, labels, loss, margin)[0]
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            a = g.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    return worst


def random_check_batch(spec: NetworkSpec, rng: np.random.Generator, pairs: int = 2):
    """Random float64 patches in alternating positive/negative order."""
    n = spec.input_patch_size
    left = rng.standard_normal((2 * pairs, n, n))
    right = rng.standard_normal((2 * pairs, n, n))
    labels = np.tile(np.array([1, 0], dtype=np.int8), pairs)
    return left, right, labels


def small_spec(arch: str) -> NetworkSpec:
    """Tiny network used by the gradient check command."""
    if arch == ACCURATE:
        return NetworkSpec(ACCURATE, num_conv_layers=2, conv_kernel_size=3, num_conv_feature_maps=3,
                           num_fc_layers=3, num_fc_units=4)
    return NetworkSpec(FAST, num_conv_layers=2, conv_kernel_size=3, num_conv_feature_maps=3)
