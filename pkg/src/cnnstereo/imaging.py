"""Image and disparity-map I/O, grayscale conversion and normalization.

Images are 2-D ``float32`` arrays of shape ``(height, width)``. Disparity maps
use the same layout; pixels without a disparity hold ``INVALID_DISPARITY``.
Only the binary Netpbm variants (P5, P6) and single-channel PFM are handled.
"""

from __future__ import annotations

import os

import numpy as np

INVALID_DISPARITY = np.float32(-1.0)


class FormatError(ValueError):
    """Raised when a file header is malformed or of an unsupported kind."""


class UnsupportedFormatError(FormatError):
    pass


class TruncatedFileError(OSError):
    """Raised when a payload is shorter than its header promises."""


class DegenerateImageError(ValueError):
    pass


def as_image(data) -> np.ndarray:
    """Validate and convert array-like data to a float32 image."""
    img = np.asarray(data, dtype=np.float32)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def _read_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    # Netpbm header: whitespace separated tokens, '#' comments to end of line,
    # then exactly one whitespace byte before the raster.
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise FormatError("unexpected end of header")
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(buf[start:pos])
    if pos >= n or not buf[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after header")
    return tokens, pos + 1


def decode_netpbm(buf: bytes) -> np.ndarray:
    """Decode a binary PGM/PPM byte string into an image scaled to [0, 1]."""
    magic = buf[:2]
    if magic in (b"P2", b"P3"):
        raise UnsupportedFormatError("ASCII Netpbm variants are not supported")
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"not a binary PGM/PPM file (magic {magic!r})")
    tokens, offset = _read_tokens(buf[2:], 3)
    offset += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"non-integer header field in {tokens!r}") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"invalid header values w={width} h={height} maxval={maxval}")

    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * channels * dtype.itemsize
    payload = buf[offset : offset + expected]
    if len(payload) < expected:
        raise TruncatedFileError(f"payload has {len(payload)} bytes, expected {expected}")

    raw = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    raw = raw.reshape(height, width, channels)
    # luma is the plain channel average
    gray = raw.sum(axis=2) / (channels * maxval)
    return gray.astype(np.float32)


def load_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_netpbm(f.read())


def encode_pgm(img: np.ndarray, maxval: int = 255) -> bytes:
    """Encode an image with values in [0, 1] as binary PGM."""
    img = as_image(img)
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii")
    return header + q.astype(dtype).tobytes()


def save_image(img: np.ndarray, path: str | os.PathLike, maxval: int = 65535) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(img, maxval))


def normalize(img: np.ndarray) -> np.ndarray:
    """Subtract the mean and divide by the population standard deviation."""
    x = as_image(img).astype(np.float64)
    if x.max() == x.min():
        raise DegenerateImageError("cannot normalize an image with a single intensity value")
    out = (x - x.mean()) / x.std()
    return out.astype(np.float32)


def decode_pfm(buf: bytes) -> np.ndarray:
    header = []
    pos = 0
    for _ in range(3):
        end = buf.find(b"\n", pos)
        if end < 0:
            raise FormatError("unterminated PFM header")
        header.append(buf[pos:end].strip())
        pos = end + 1

    if header[0] == b"PF":
        raise UnsupportedFormatError("3-channel PFM is not supported")
    if header[0] != b"Pf":
        raise FormatError(f"not a PFM file (magic {header[0]!r})")
    try:
        width, height = (int(t) for t in header[1].split())
        scale = float(header[2])
    except ValueError as exc:
        raise FormatError("malformed PFM header") from exc
    if width < 1 or height < 1 or scale == 0.0:
        raise FormatError("invalid PFM dimensions or scale")

    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    expected = width * height * 4
    payload = buf[pos : pos + expected]
    if len(payload) < expected:
        raise TruncatedFileError(f"payload has {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    data = np.flipud(data).astype(np.float32)
    data[~np.isfinite(data)] = INVALID_DISPARITY
    return data


def encode_pfm(dmap: np.ndarray) -> bytes:
    """Encode a disparity map as little-endian PFM; invalid pixels become +inf."""
    data = np.asarray(dmap, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError("disparity map must be 2-D")
    out = data.copy()
    out[out == INVALID_DISPARITY] = np.inf
    height, width = out.shape
    header = f"Pf\n{width} {height}\n-1.0\n".encode("ascii")
    return header + np.flipud(out).astype("<f4").tobytes()


def load_pfm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_pfm(f.read())


def save_pfm(dmap: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(encode_pfm(dmap))


def jet(t: np.ndarray) -> np.ndarray:
    """Jet-style ramp: t=0 is dark blue (0, 0, .5), t=1 is dark red (.5, 0, 0).

    Each channel is ``clip(1.5 - |4t - c|, 0, 1)`` with c = 3, 2, 1 for red,
    green and blue respectively.
    """
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)[..., None]
    centers = np.array([3.0, 2.0, 1.0])
    return np.clip(1.5 - np.abs(4.0 * t - centers), 0.0, 1.0)


def colorize(dmap: np.ndarray, max_disparity: float) -> bytes:
    """Render a disparity map as binary PPM bytes; invalid pixels are black."""
    if max_disparity <= 0:
        raise ValueError("max_disparity must be positive")
    data = np.asarray(dmap, dtype=np.float64)
    rgb = np.rint(jet(data / max_disparity) * 255).astype(np.uint8)
    rgb[data < 0] = 0
    header = f"P6\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    return header + rgb.tobytes()
