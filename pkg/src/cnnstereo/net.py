"""Inference for the two patch-similarity networks.

Both architectures share a stack of valid 3x3 (or k x k) convolutions that
reduces an ``input_patch_size`` patch to a single feature vector. The fast
architecture compares the two vectors by cosine similarity; the accurate one
concatenates them and runs a few fully-connected layers ending in a sigmoid.

Feature maps are channel-first, ``(channels, height, width)`` or batched
``(batch, channels, height, width)``. Convolution is cross-correlation (no
kernel flip).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .costs import INVALID_COST
from .imaging import FormatError, TruncatedFileError, as_image

FAST = "fast"
ACCURATE = "accurate"

WEIGHTS_MAGIC = b"CSNW"
WEIGHTS_VERSION = 1
_ARCH_CODES = {FAST: 0, ACCURATE: 1}


@dataclass(frozen=True)
class NetworkSpec:
    arch: str
    num_conv_layers: int
    conv_kernel_size: int
    num_conv_feature_maps: int
    num_fc_layers: int = 0
    num_fc_units: int = 0
    input_patch_size: int | None = None

    def __post_init__(self):
        expected = self.num_conv_layers * (self.conv_kernel_size - 1) + 1
        if self.input_patch_size is None:
            object.__setattr__(self, "input_patch_size", expected)
        if self.arch not in _ARCH_CODES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.num_conv_layers < 1 or self.conv_kernel_size < 1 or self.num_conv_feature_maps < 1:
            raise ValueError("convolutional hyperparameters must be positive")
        if self.input_patch_size != expected:
            raise ValueError(
                f"input_patch_size {self.input_patch_size} inconsistent with "
                f"{self.num_conv_layers} layers of kernel {self.conv_kernel_size} (expected {expected})"
            )
        if self.arch == ACCURATE:
            if self.num_fc_layers < 1:
                raise ValueError("accurate architecture needs at least one fully-connected layer")
            if self.num_fc_layers > 1 and self.num_fc_units < 1:
                raise ValueError("num_fc_units must be positive")
        elif self.num_fc_layers or self.num_fc_units:
            raise ValueError("fast architecture has no fully-connected layers")

    def conv_shapes(self) -> list[tuple[int, int, int, int]]:
        f, k = self.num_conv_feature_maps, self.conv_kernel_size
        return [(f, 1 if i == 0 else f, k, k) for i in range(self.num_conv_layers)]

    def fc_shapes(self) -> list[tuple[int, int]]:
        """Matrix shapes ``(out, in)``; the last layer always has one output."""
        shapes = []
        for i in range(self.num_fc_layers):
            n_in = 2 * self.num_conv_feature_maps if i == 0 else self.num_fc_units
            n_out = 1 if i == self.num_fc_layers - 1 else self.num_fc_units
            shapes.append((n_out, n_in))
        return shapes


@dataclass
class NetworkWeights:
    """Ordered layer parameters: ``conv`` and ``fc`` lists of (weight, bias)."""

    conv: list[tuple[np.ndarray, np.ndarray]]
    fc: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in self.conv + self.fc:
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, spec: NetworkSpec, arrays: list[np.ndarray]) -> "NetworkWeights":
        pairs = list(zip(arrays[0::2], arrays[1::2]))
        n = spec.num_conv_layers
        return cls(conv=pairs[:n], fc=pairs[n:])

    def astype(self, dtype) -> "NetworkWeights":
        cast = [(w.astype(dtype), b.astype(dtype)) for w, b in self.conv]
        cast_fc = [(w.astype(dtype), b.astype(dtype)) for w, b in self.fc]
        return NetworkWeights(cast, cast_fc)

    def copy(self) -> "NetworkWeights":
        return self.astype(self.conv[0][0].dtype)

    def check(self, spec: NetworkSpec) -> None:
        if len(self.conv) != spec.num_conv_layers or len(self.fc) != spec.num_fc_layers:
            raise ValueError("layer count does not match the network spec")
        for (w, b), shape in zip(self.conv, spec.conv_shapes()):
            if w.shape != shape or b.shape != (shape[0],):
                raise ValueError(f"conv layer shape {w.shape} does not match {shape}")
        for (w, b), shape in zip(self.fc, spec.fc_shapes()):
            if w.shape != shape or b.shape != (shape[0],):
                raise ValueError(f"fc layer shape {w.shape} does not match {shape}")


def init_weights(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32) -> NetworkWeights:
    """Uniform initialization in +-sqrt(1 / fan_in) for weights and biases."""

    def layer(shape):
        fan_in = int(np.prod(shape[1:]))
        bound = np.sqrt(1.0 / fan_in)
        w = rng.uniform(-bound, bound, size=shape).astype(dtype)
        b = rng.uniform(-bound, bound, size=shape[0]).astype(dtype)
        return w, b

    return NetworkWeights(
        conv=[layer(s) for s in spec.conv_shapes()],
        fc=[layer(s) for s in spec.fc_shapes()],
    )


def conv_valid(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of ``(C, H, W)`` or ``(B, C, H, W)`` input."""
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    out_c, in_c, k, k2 = kernels.shape
    if k != k2 or x.shape[1] != in_c or bias.shape != (out_c,):
        raise ValueError(f"shape mismatch: input {x.shape}, kernels {kernels.shape}, bias {bias.shape}")
    h_out, w_out = x.shape[2] - k + 1, x.shape[3] - k + 1
    if h_out < 1 or w_out < 1:
        raise ValueError(f"input {x.shape[2:]} smaller than kernel {k}x{k}")
    acc = np.zeros((x.shape[0], h_out, w_out, out_c), dtype=np.result_type(x, kernels))
    for i in range(k):
        for j in range(k):
            acc += np.tensordot(x[:, :, i : i + h_out, j : j + w_out], kernels[:, :, i, j], axes=([1], [1]))
    out = acc.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    return out[0] if squeeze else out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z)))


def _relu_after(spec: NetworkSpec, layer: int) -> bool:
    return spec.arch == ACCURATE or layer < spec.num_conv_layers - 1


def extract_features(spec: NetworkSpec, weights: NetworkWeights, x: np.ndarray) -> np.ndarray:
    """Run the convolutional sub-network on feature maps of any size."""
    for i, (w, b) in enumerate(weights.conv):
        x = conv_valid(x, w, b)
        if _relu_after(spec, i):
            x = relu(x)
    return x


def describe_patch(spec: NetworkSpec, weights: NetworkWeights, patch) -> np.ndarray:
    """Feature vector of length ``num_conv_feature_maps`` for one patch."""
    patch = np.asarray(patch, dtype=weights.conv[0][0].dtype)
    n = spec.input_patch_size
    if patch.shape != (n, n):
        raise ValueError(f"patch must be {n}x{n}, got {patch.shape}")
    return extract_features(spec, weights, patch[None])[:, 0, 0]


def score_fast(f_left: np.ndarray, f_right: np.ndarray) -> float:
    """Cosine similarity of two feature vectors."""
    f_left = np.asarray(f_left, dtype=np.float64)
    f_right = np.asarray(f_right, dtype=np.float64)
    if f_left.shape != f_right.shape:
        raise ValueError("feature vectors differ in length")
    nl, nr = np.linalg.norm(f_left), np.linalg.norm(f_right)
    if nl == 0 or nr == 0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.clip(f_left @ f_right / (nl * nr), -1.0, 1.0))


def fc_head(weights: NetworkWeights, z: np.ndarray) -> np.ndarray:
    """Fully-connected head on ``(2F, N)`` columns; returns ``(N,)`` sigmoid scores."""
    last = len(weights.fc) - 1
    for i, (w, b) in enumerate(weights.fc):
        z = w @ z + b[:, None]
        if i < last:
            z = relu(z)
    return sigmoid(z[0])


def score_accurate(spec: NetworkSpec, weights: NetworkWeights, f_left, f_right) -> float:
    f = spec.num_conv_feature_maps
    f_left = np.asarray(f_left, dtype=weights.fc[0][0].dtype)
    f_right = np.asarray(f_right, dtype=weights.fc[0][0].dtype)
    if f_left.shape != (f,) or f_right.shape != (f,):
        raise ValueError(f"feature vectors must have length {f}")
    return float(fc_head(weights, np.concatenate([f_left, f_right])[:, None])[0])


def feature_maps(spec: NetworkSpec, weights: NetworkWeights, img) -> np.ndarray:
    """Per-pixel features ``(F, h, w)`` of a reflect-padded full image."""
    img = as_image(img).astype(weights.conv[0][0].dtype)
    pad = (spec.input_patch_size - 1) // 2
    padded = np.pad(img, pad, mode="reflect")
    return extract_features(spec, weights, padded[None])


def _unit_features(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.sqrt((f * f).sum(axis=0))
    ok = norm > 0
    return f / np.where(ok, norm, 1), ok


def volume_from_features(
    spec: NetworkSpec, weights: NetworkWeights, f_left: np.ndarray, f_right: np.ndarray, max_disparity: int
) -> np.ndarray:
    """Matching cost ``-s`` for every pixel and disparity from precomputed features."""
    _, h, w = f_left.shape
    vol = np.full((h, w, max_disparity), INVALID_COST, dtype=np.float32)
    if spec.arch == FAST:
        ul, okl = _unit_features(f_left)
        ur, okr = _unit_features(f_right)
        for d in range(min(max_disparity, w)):
            dot = (ul[:, :, d:] * ur[:, :, : w - d]).sum(axis=0)
            valid = okl[:, d:] & okr[:, : w - d]
            vol[:, d:, d] = np.where(valid, -np.clip(dot, -1.0, 1.0), INVALID_COST)
    else:
        f = spec.num_conv_feature_maps
        for d in range(min(max_disparity, w)):
            z = np.concatenate([f_left[:, :, d:], f_right[:, :, : w - d]], axis=0)
            s = fc_head(weights, z.reshape(2 * f, -1))
            vol[:, d:, d] = -s.reshape(h, w - d)
    return vol


def cost_volume_from_network(
    spec: NetworkSpec, weights: NetworkWeights, left, right, max_disparity: int
) -> np.ndarray:
    """Full-image cost volume; the sub-network runs once per image."""
    left = as_image(left)
    right = as_image(right)
    if left.shape != right.shape:
        raise ValueError(f"image dimensions differ: {left.shape} vs {right.shape}")
    if max_disparity < 1:
        raise ValueError("max_disparity must be >= 1")
    weights.check(spec)
    fl = feature_maps(spec, weights, left)
    fr = feature_maps(spec, weights, right)
    return volume_from_features(spec, weights, fl, fr, max_disparity)


def encode_weights(spec: NetworkSpec, weights: NetworkWeights) -> bytes:
    weights.check(spec)
    header = WEIGHTS_MAGIC + struct.pack(
        "<8I",
        WEIGHTS_VERSION,
        _ARCH_CODES[spec.arch],
        spec.num_conv_layers,
        spec.conv_kernel_size,
        spec.num_conv_feature_maps,
        spec.num_fc_layers,
        spec.num_fc_units,
        spec.input_patch_size,
    )
    return header + b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in weights.arrays())


def decode_weights(buf: bytes) -> tuple[NetworkSpec, NetworkWeights]:
    if len(buf) < 36 or buf[:4] != WEIGHTS_MAGIC:
        raise FormatError("not a network weight file")
    version, arch, *fields = struct.unpack("<8I", buf[4:36])
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weight file version {version}")
    names = {v: k for k, v in _ARCH_CODES.items()}
    if arch not in names:
        raise FormatError(f"unknown architecture code {arch}")
    try:
        spec = NetworkSpec(names[arch], *fields)
    except ValueError as exc:
        raise FormatError(f"invalid network spec in header: {exc}") from exc

    shapes = []
    for w_shape in spec.conv_shapes() + spec.fc_shapes():
        shapes.extend((w_shape, (w_shape[0],)))
    expected = 36 + 4 * sum(int(np.prod(s)) for s in shapes)
    if len(buf) < expected:
        raise TruncatedFileError(f"weight file has {len(buf)} bytes, expected {expected}")
    if len(buf) > expected:
        raise FormatError("trailing bytes after weight payload")

    arrays = []
    pos = 36
    for shape in shapes:
        n = int(np.prod(shape))
        arrays.append(np.frombuffer(buf, dtype="<f4", count=n, offset=pos).reshape(shape).astype(np.float32))
        pos += 4 * n
    return spec, NetworkWeights.from_arrays(spec, arrays)


def save_weights(spec: NetworkSpec, weights: NetworkWeights, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(encode_weights(spec, weights))


def load_weights(path: str | os.PathLike) -> tuple[NetworkSpec, NetworkWeights]:
    with open(path, "rb") as f:
        return decode_weights(f.read())
