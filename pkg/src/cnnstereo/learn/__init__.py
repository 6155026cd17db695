"""Training data, augmentation, losses and the training loop."""

from .augment import (
    IDENTITY_AUGMENT,
    KITTI_AUGMENT,
    MIDDLEBURY_AUGMENT,
    AugmentParams,
    PatchTransform,
    fixed_transform,
    sample_transform,
)
from .backprop import BCE, HINGE, loss_and_grads, scores
from .dataset import NEGATIVE, POSITIVE, PatchPairDataset, PatchPairExample, augment_pair, extract_examples
from .losses import bce_loss, hinge_loss, sgd_momentum_step
from .train import TrainConfig, TrainResult, gradient_check, ranking_accuracy, train

__all__ = [
    "AugmentParams",
    "BCE",
    "HINGE",
    "IDENTITY_AUGMENT",
    "KITTI_AUGMENT",
    "MIDDLEBURY_AUGMENT",
    "NEGATIVE",
    "POSITIVE",
    "PatchPairDataset",
    "PatchPairExample",
    "PatchTransform",
    "TrainConfig",
    "TrainResult",
    "augment_pair",
    "bce_loss",
    "extract_examples",
    "fixed_transform",
    "gradient_check",
    "hinge_loss",
    "loss_and_grads",
    "ranking_accuracy",
    "sample_transform",
    "scores",
    "sgd_momentum_step",
    "train",
]
