"""Hyperparameter presets for the three benchmark settings and both networks.

Values not used by an architecture (fully-connected sizes and cross-based
aggregation for the fast network) are ``None``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .learn.augment import AugmentParams, KITTI_AUGMENT, MIDDLEBURY_AUGMENT
from .net import ACCURATE, FAST, NetworkSpec
from .sgm import SgmParams

STAGES = ("cbca", "sgm", "lr_check", "interpolation", "subpixel", "median", "bilateral")


@dataclass(frozen=True)
class Hyperparams:
    name: str
    arch: str
    input_patch_size: int
    num_conv_layers: int
    num_conv_feature_maps: int
    conv_kernel_size: int
    num_fc_layers: int | None
    num_fc_units: int | None
    dataset_neg_low: float
    dataset_neg_high: float
    dataset_pos: float
    cbca_intensity: float | None
    cbca_distance: int | None
    cbca_num_iterations_1: int | None
    cbca_num_iterations_2: int | None
    sgm_P1: float
    sgm_P2: float
    sgm_Q1: float
    sgm_Q2: float
    sgm_V: float
    sgm_D: float
    blur_sigma: float
    blur_threshold: float
    learning_rate: float
    augment: AugmentParams
    cbca: bool = True
    sgm: bool = True
    lr_check: bool = True
    interpolation: bool = True
    subpixel: bool = True
    median: bool = True
    bilateral: bool = True

    def network_spec(self) -> NetworkSpec:
        return NetworkSpec(
            arch=self.arch,
            num_conv_layers=self.num_conv_layers,
            conv_kernel_size=self.conv_kernel_size,
            num_conv_feature_maps=self.num_conv_feature_maps,
            num_fc_layers=self.num_fc_layers or 0,
            num_fc_units=self.num_fc_units or 0,
            input_patch_size=self.input_patch_size,
        )

    def sgm_params(self) -> SgmParams:
        return SgmParams(self.sgm_P1, self.sgm_P2, self.sgm_Q1, self.sgm_Q2, self.sgm_V, self.sgm_D)

    @property
    def has_cbca(self) -> bool:
        return self.cbca_intensity is not None

    def enabled(self, stage: str) -> bool:
        """Whether a stage actually runs, accounting for its prerequisites."""
        if stage not in STAGES:
            raise KeyError(stage)
        if stage == "cbca":
            return self.cbca and self.has_cbca
        if stage == "interpolation":
            return self.interpolation and self.lr_check
        return getattr(self, stage)

    def without(self, *stages: str) -> "Hyperparams":
        for s in stages:
            if s not in STAGES:
                raise KeyError(f"unknown stage {s!r}")
        return dataclasses.replace(self, **{s: False for s in stages})

    def replace(self, **changes) -> "Hyperparams":
        return dataclasses.replace(self, **changes)


def _preset(name, arch, col, **extra):
    return Hyperparams(name=name, arch=arch, **col, **extra)


# one column of the published hyperparameter table per preset
_TABLE = {
    "kitti2012-fst": dict(
        input_patch_size=9, num_conv_layers=4, num_conv_feature_maps=64, conv_kernel_size=3,
        num_fc_layers=None, num_fc_units=None,
        dataset_neg_low=4, dataset_neg_high=10, dataset_pos=1,
        cbca_intensity=None, cbca_distance=None, cbca_num_iterations_1=None, cbca_num_iterations_2=None,
        sgm_P1=4, sgm_P2=223, sgm_Q1=3, sgm_Q2=7.5, sgm_V=1.5, sgm_D=0.02,
        blur_sigma=7.74, blur_threshold=5,
    ),
    "kitti2012-acrt": dict(
        input_patch_size=9, num_conv_layers=4, num_conv_feature_maps=112, conv_kernel_size=3,
        num_fc_layers=4, num_fc_units=384,
        dataset_neg_low=4, dataset_neg_high=10, dataset_pos=1,
        cbca_intensity=0.13, cbca_distance=5, cbca_num_iterations_1=2, cbca_num_iterations_2=0,
        sgm_P1=1.32, sgm_P2=32, sgm_Q1=3, sgm_Q2=6, sgm_V=2, sgm_D=0.08,
        blur_sigma=6, blur_threshold=6,
    ),
    "kitti2015-fst": dict(
        input_patch_size=9, num_conv_layers=4, num_conv_feature_maps=64, conv_kernel_size=3,
        num_fc_layers=None, num_fc_units=None,
        dataset_neg_low=4, dataset_neg_high=10, dataset_pos=1,
        cbca_intensity=None, cbca_distance=None, cbca_num_iterations_1=None, cbca_num_iterations_2=None,
        sgm_P1=2.3, sgm_P2=42.3, sgm_Q1=3, sgm_Q2=6, sgm_V=1.25, sgm_D=0.08,
        blur_sigma=4.64, blur_threshold=5,
    ),
    "kitti2015-acrt": dict(
        input_patch_size=9, num_conv_layers=4, num_conv_feature_maps=112, conv_kernel_size=3,
        num_fc_layers=4, num_fc_units=384,
        dataset_neg_low=4, dataset_neg_high=10, dataset_pos=1,
        cbca_intensity=0.03, cbca_distance=5, cbca_num_iterations_1=2, cbca_num_iterations_2=4,
        sgm_P1=2.3, sgm_P2=55.8, sgm_Q1=3, sgm_Q2=6, sgm_V=1.75, sgm_D=0.08,
        blur_sigma=6, blur_threshold=5,
    ),
    "middlebury-fst": dict(
        input_patch_size=11, num_conv_layers=5, num_conv_feature_maps=64, conv_kernel_size=3,
        num_fc_layers=None, num_fc_units=None,
        dataset_neg_low=1.5, dataset_neg_high=6, dataset_pos=0.5,
        cbca_intensity=None, cbca_distance=None, cbca_num_iterations_1=None, cbca_num_iterations_2=None,
        sgm_P1=2.3, sgm_P2=55.9, sgm_Q1=4, sgm_Q2=8, sgm_V=1.5, sgm_D=0.08,
        blur_sigma=6, blur_threshold=2,
    ),
    "middlebury-acrt": dict(
        input_patch_size=11, num_conv_layers=5, num_conv_feature_maps=112, conv_kernel_size=3,
        num_fc_layers=3, num_fc_units=384,
        dataset_neg_low=1.5, dataset_neg_high=18, dataset_pos=0.5,
        cbca_intensity=0.02, cbca_distance=14, cbca_num_iterations_1=2, cbca_num_iterations_2=16,
        sgm_P1=1.3, sgm_P2=18.1, sgm_Q1=4.5, sgm_Q2=9, sgm_V=2.75, sgm_D=0.13,
        blur_sigma=1.7, blur_threshold=2,
    ),
}


def _build() -> dict[str, Hyperparams]:
    presets = {}
    for name, col in _TABLE.items():
        dataset, kind = name.split("-")
        arch = FAST if kind == "fst" else ACCURATE
        extra = dict(
            learning_rate=0.002 if arch == FAST else 0.003,
            augment=MIDDLEBURY_AUGMENT if dataset == "middlebury" else KITTI_AUGMENT,
        )
        if dataset == "middlebury":
            # no left-right check on this data set
            extra.update(lr_check=False, interpolation=False)
        presets[name] = _preset(name, arch, col, **extra)
    return presets


PRESETS = _build()


def get_preset(name: str) -> Hyperparams:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def _coerce(field: dataclasses.Field, text: str):
    text = text.strip()
    kind = str(field.type)
    if text.lower() in ("none", ""):
        if "None" in kind:
            return None
        raise ValueError(f"{field.name} cannot be empty")
    if kind.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{field.name} expects a boolean, got {text!r}")
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    if kind.startswith("str"):
        return text
    raise ValueError(f"{field.name} cannot be set from a config file")


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into typed overrides."""
    fields = {f.name: f for f in dataclasses.fields(Hyperparams)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in fields or key in ("name", "arch", "augment"):
            raise ValueError(f"line {lineno}: unknown hyperparameter {key!r}")
        out[key] = _coerce(fields[key], value)
    return out
