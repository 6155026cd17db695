"""Error rate of a disparity map against ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EvalReport:
    error_rate: float  # percent
    threshold: float
    n_evaluated: int
    n_errors: int
    timings: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "error_rate": self.error_rate,
            "threshold": self.threshold,
            "n_evaluated": self.n_evaluated,
            "n_errors": self.n_errors,
            "timings": dict(self.timings),
        }


def error_rate(pred, gt, threshold: float, mask=None) -> EvalReport:
    """Percentage of evaluated pixels with ``|pred - gt| > threshold``.

    Evaluated pixels have valid (finite, non-negative) ground truth and lie
    inside ``mask`` when one is given. An invalid prediction counts as an error.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    evaluated = np.isfinite(gt) & (gt >= 0)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.shape:
            raise ValueError("mask and ground truth differ in size")
        evaluated &= mask
    n = int(evaluated.sum())
    if n == 0:
        raise ValueError("ground truth has no valid pixel to evaluate")
    p = pred[evaluated]
    bad = ~np.isfinite(p) | (p < 0) | (np.abs(p - gt[evaluated]) > threshold)
    n_bad = int(bad.sum())
    return EvalReport(100.0 * n_bad / n, float(threshold), n, n_bad)
