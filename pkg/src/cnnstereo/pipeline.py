"""Stereo method orchestration: matching cost, aggregation, refinement.

Stage order: cost, CBCA (``cbca_num_iterations_1``), SGM, CBCA
(``cbca_num_iterations_2``), winner-takes-all for both reference images,
left-right check, interpolation, subpixel enhancement, median filter,
bilateral filter. The right-reference volume runs through the same code on
horizontally mirrored inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import cbca, costs, refine, sgm
from .imaging import as_image, normalize
from .metrics import error_rate
from .net import ACCURATE, FAST, NetworkSpec, NetworkWeights, cost_volume_from_network
from .presets import Hyperparams

COST_SOURCES = ("sad", "census", "ncc", "cnn-fast", "cnn-acrt")
ABLATION_STAGES = ("cbca", "sgm", "interpolation", "subpixel", "median", "bilateral")
_CNN_ARCH = {"cnn-fast": FAST, "cnn-acrt": ACCURATE}


class ConfigError(ValueError):
    """Inconsistent pipeline configuration."""


@dataclass
class PipelineResult:
    disparity: np.ndarray
    raw_cost: np.ndarray
    labels: np.ndarray | None = None
    timings: dict[str, float] = field(default_factory=dict)
    intermediates: dict[str, np.ndarray] = field(default_factory=dict)


class _Timer:
    def __init__(self, timings: dict[str, float]):
        self.timings = timings

    def __call__(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start
        return out


def matching_cost(
    source: str,
    left: np.ndarray,
    right: np.ndarray,
    max_disparity: int,
    network: tuple[NetworkSpec, NetworkWeights] | None = None,
) -> np.ndarray:
    """Raw left-reference cost volume for one of :data:`COST_SOURCES`."""
    if source == "sad":
        return costs.sad_volume(left, right, max_disparity)
    if source == "census":
        return costs.census_volume(costs.census_transform(left), costs.census_transform(right), max_disparity)
    if source == "ncc":
        return costs.ncc_volume(left, right, max_disparity)
    if source in _CNN_ARCH:
        if network is None:
            raise ConfigError(f"cost source {source!r} needs trained network weights")
        spec, weights = network
        if spec.arch != _CNN_ARCH[source]:
            raise ConfigError(f"cost source {source!r} does not match a {spec.arch} network")
        return cost_volume_from_network(spec, weights, left, right, max_disparity)
    raise ConfigError(f"unknown cost source {source!r}; choose from {', '.join(COST_SOURCES)}")


def _refine_volume(cost, left, right, arms_l, arms_r, hp: Hyperparams, timer: _Timer, tag: str, keep: dict | None):
    if hp.enabled("cbca") and hp.cbca_num_iterations_1:
        cost = timer("cbca", cbca.aggregate, cost, arms_l, arms_r, hp.cbca_num_iterations_1)
    if keep is not None:
        keep[f"{tag}cbca1"] = cost
    if hp.enabled("sgm"):
        cost = timer("sgm", sgm.semiglobal, cost, left, right, hp.sgm_params())
    if keep is not None:
        keep[f"{tag}sgm"] = cost
    if hp.enabled("cbca") and hp.cbca_num_iterations_2:
        cost = timer("cbca", cbca.aggregate, cost, arms_l, arms_r, hp.cbca_num_iterations_2)
    if keep is not None:
        keep[f"{tag}cbca2"] = cost
    return cost


def run_pipeline(
    left,
    right,
    hp: Hyperparams,
    cost_source: str,
    max_disparity: int,
    network: tuple[NetworkSpec, NetworkWeights] | None = None,
    keep_intermediates: bool = False,
) -> PipelineResult:
    """Disparity map of the left image.

    With every stage disabled the result is the winner-takes-all disparity
    of the raw matching cost.
    """
    if cost_source not in COST_SOURCES:
        raise ConfigError(f"unknown cost source {cost_source!r}; choose from {', '.join(COST_SOURCES)}")
    if cost_source in _CNN_ARCH and network is None:
        raise ConfigError(f"cost source {cost_source!r} needs trained network weights")
    if max_disparity < 1:
        raise ConfigError("max_disparity must be >= 1")
    left = as_image(left)
    right = as_image(right)
    if left.shape != right.shape:
        raise ValueError(f"image dimensions differ: {left.shape} vs {right.shape}")

    timings: dict[str, float] = {}
    timer = _Timer(timings)
    keep = {} if keep_intermediates else None

    left = timer("normalize", normalize, left)
    right = timer("normalize", normalize, right)
    raw = timer("cost", matching_cost, cost_source, left, right, max_disparity, network)

    arms_l = arms_r = None
    if hp.enabled("cbca"):
        arms_l = timer("cbca", cbca.compute_arms, left, hp.cbca_intensity, hp.cbca_distance)
        arms_r = timer("cbca", cbca.compute_arms, right, hp.cbca_intensity, hp.cbca_distance)
    vol = _refine_volume(raw, left, right, arms_l, arms_r, hp, timer, "", keep)
    disp = timer("wta", refine.wta, vol)
    if keep is not None:
        keep["wta"] = disp

    labels = None
    if hp.enabled("lr_check"):
        mirrored = costs.right_reference(raw)
        left_m, right_m = right[:, ::-1], left[:, ::-1]
        arms_lm = arms_rm = None
        if arms_l is not None:
            arms_lm, arms_rm = arms_r.flipped(), arms_l.flipped()
        vol_r = _refine_volume(mirrored, left_m, right_m, arms_lm, arms_rm, hp, timer, "right_", keep)
        disp_r = timer("wta", refine.wta, vol_r)[:, ::-1]
        labels = timer("lr_check", refine.lr_check, disp, disp_r, max_disparity)
        if keep is not None:
            keep["wta_right"] = disp_r
        if hp.enabled("interpolation") and (labels == refine.CORRECT).any():
            disp = timer("interpolation", refine.interpolate, disp, labels)
    if keep is not None:
        keep["interpolation"] = disp

    if hp.subpixel:
        disp = timer("subpixel", refine.subpixel, disp, vol)
    if keep is not None:
        keep["subpixel"] = disp
    if hp.median:
        disp = timer("median", refine.median5, disp)
    if keep is not None:
        keep["median"] = disp
    if hp.bilateral:
        disp = timer("bilateral", refine.bilateral, disp, left, hp.blur_sigma, hp.blur_threshold)
    if keep is not None:
        keep["bilateral"] = disp
    return PipelineResult(disp.astype(np.float32), raw, labels, timings, keep or {})


@dataclass(frozen=True)
class StereoPair:
    left: np.ndarray
    right: np.ndarray
    gt: np.ndarray
    mask: np.ndarray | None = None


@dataclass(frozen=True)
class AblationRow:
    name: str
    error_rate: float


def ablation_run(
    pairs: list[StereoPair],
    hp: Hyperparams,
    cost_source: str,
    max_disparity: int,
    threshold: float,
    network: tuple[NetworkSpec, NetworkWeights] | None = None,
) -> list[AblationRow]:
    """Error over all pairs with each stage removed in turn.

    Rows: ``none excluded``, one per entry of :data:`ABLATION_STAGES`, and
    ``all excluded`` (winner-takes-all on the raw cost).
    """
    if not pairs:
        raise ValueError("ablation needs at least one stereo pair")
    settings = [("none excluded", hp)]
    settings += [(f"{s} excluded", hp.without(s)) for s in ABLATION_STAGES]
    settings.append(("all excluded", hp.without(*ABLATION_STAGES, "lr_check")))
    rows = []
    for name, setting in settings:
        n_bad = n_total = 0
        for pair in pairs:
            result = run_pipeline(pair.left, pair.right, setting, cost_source, max_disparity, network)
            report = error_rate(result.disparity, pair.gt, threshold, pair.mask)
            n_bad += report.n_errors
            n_total += report.n_evaluated
        rows.append(AblationRow(name, 100.0 * n_bad / n_total))
    return rows
