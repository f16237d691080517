"""Pixel-level primitives: decoding, resizing, tiling, and normalization.

All buffers are 8-bit RGB.  Grayscale sources are promoted by channel
replication and alpha channels are discarded, because the downstream encoder
contract is strictly 3-channel.

Resizing is bilinear with half-pixel-center coordinate mapping and edge
clamping.  For an output pixel ``dx`` the source coordinate is
``(dx + 0.5) * src/dst - 0.5`` clamped to ``[0, src - 1]``, split into a
floor index and a float32 fraction.  The four neighbours are blended in
float32 as ``lerp(a, b, f) = a + (b - a) * f``, horizontally then
vertically, and the result is rounded half-to-even back to 8 bits.  Every
step is elementwise with a fixed operation order, so output buffers are
byte-reproducible and frozen fixtures stay portable.

Raw fixture file format ("DFIM"): magic ``DFIM``, u32 width, u32 height
(little-endian), then ``width * height * 3`` bytes of row-major interleaved
RGB pixels.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit, prange
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    InvalidDimension,
    InvalidNormalization,
    OutOfBounds,
)

FIXTURE_MAGIC = b"DFIM"

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8"


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable 8-bit RGB image; ``data`` has shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise InvalidDimension(f"expected (h, w, 3) RGB array, got shape {self.data.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidDimension("image must be at least 1x1")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class PixelTensor:
    """Normalized float32 pixels in channel-planar layout (3, height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise InvalidDimension(f"expected (3, h, w) tensor, got shape {self.data.shape}")
        if not np.isfinite(arr).all():
            raise InvalidNormalization("pixel tensor contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CropRect:
    """Pixel-aligned rectangle inside a parent image."""

    x: int
    y: int
    w: int
    h: int


def decode_image(data: bytes) -> ImageBuffer:
    """Decode PNG, JPEG, or raw DFIM fixture bytes into an RGB buffer."""
    if data[:4] == FIXTURE_MAGIC:
        return _decode_fixture(data)
    if data[:8] == _PNG_MAGIC or data[:2] == _JPEG_MAGIC:
        try:
            with Image.open(io.BytesIO(data)) as img:
                img.load()
                if img.mode != "RGB":
                    img = img.convert("RGB")
                arr = np.asarray(img, dtype=np.uint8)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            raise DecodeError(f"malformed image stream: {exc}") from exc
        return ImageBuffer(arr)
    raise DecodeError("unsupported image format (expected PNG, JPEG, or DFIM)")


def _decode_fixture(data: bytes) -> ImageBuffer:
    if len(data) < 12:
        raise DecodeError("DFIM stream shorter than its header")
    magic, width, height = struct.unpack_from("<4sII", data, 0)
    del magic  # checked by the caller
    if width < 1 or height < 1:
        raise DecodeError(f"DFIM dimensions {width}x{height} out of range")
    expected = 12 + width * height * 3
    if len(data) != expected:
        raise DecodeError(f"DFIM payload is {len(data)} bytes, expected {expected}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=12).reshape(height, width, 3)
    return ImageBuffer(pixels.copy())


def encode_fixture(img: ImageBuffer) -> bytes:
    """Serialize a buffer into the raw DFIM fixture format."""
    header = struct.pack("<4sII", FIXTURE_MAGIC, img.width, img.height)
    return header + img.data.tobytes()


def resize(img: ImageBuffer, target_w: int, target_h: int) -> ImageBuffer:
    """Bilinear resize to exactly (target_w, target_h); see module docstring."""
    if target_w < 1 or target_h < 1:
        raise InvalidDimension(f"resize target {target_w}x{target_h} out of range")

    x0, x1, fx = _sample_axis(img.width, target_w)
    y0, y1, fy = _sample_axis(img.height, target_h)
    out = np.empty((target_h, target_w, 3), dtype=np.uint8)
    _bilinear_kernel(img.data, x0, x1, fx, y0, y1, fy, out)
    return ImageBuffer(out)


@njit(cache=True)
def _round_half_even(x: float) -> float:
    f = math.floor(x)
    r = x - f
    if r < 0.5:
        return f
    if r > 0.5:
        return f + 1.0
    if f % 2.0 == 0.0:
        return f
    return f + 1.0


@njit(parallel=True, cache=True)
def _bilinear_kernel(src, x0, x1, fx, y0, y1, fy, out):
    # Output pixels are independent, so parallel scheduling cannot change
    # the result.
    height, width = out.shape[0], out.shape[1]
    for dy in prange(height):
        r0 = y0[dy]
        r1 = y1[dy]
        wy = fy[dy]
        for dx in range(width):
            c0 = x0[dx]
            c1 = x1[dx]
            wx = fx[dx]
            for ch in range(3):
                v00 = np.float32(src[r0, c0, ch])
                v10 = np.float32(src[r0, c1, ch])
                v01 = np.float32(src[r1, c0, ch])
                v11 = np.float32(src[r1, c1, ch])
                top = v00 + (v10 - v00) * wx
                bottom = v01 + (v11 - v01) * wx
                value = top + (bottom - top) * wy
                rounded = _round_half_even(np.float64(value))
                out[dy, dx, ch] = np.uint8(min(max(rounded, 0.0), 255.0))


def _sample_axis(src_len: int, dst_len: int):
    """Clamped source indices and float32 blend weights for one axis."""
    scale = np.float32(src_len) / np.float32(dst_len)
    coords = (np.arange(dst_len, dtype=np.float32) + np.float32(0.5)) * scale - np.float32(0.5)
    coords = np.clip(coords, np.float32(0.0), np.float32(src_len - 1))
    lo = np.floor(coords).astype(np.int64)
    frac = coords - lo.astype(np.float32)
    hi = np.minimum(lo + 1, src_len - 1)
    return lo, hi, frac


def extract_tile(img: ImageBuffer, rect: CropRect) -> ImageBuffer:
    """Copy the exact pixel region described by ``rect`` (no resampling)."""
    if rect.w < 1 or rect.h < 1:
        raise OutOfBounds(f"tile size {rect.w}x{rect.h} out of range")
    if rect.x < 0 or rect.y < 0 or rect.x + rect.w > img.width or rect.y + rect.h > img.height:
        raise OutOfBounds(
            f"tile ({rect.x},{rect.y},{rect.w},{rect.h}) exceeds {img.width}x{img.height} image"
        )
    region = img.data[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w]
    return ImageBuffer(region.copy())


def normalize(img: ImageBuffer, mean: Sequence[float], std: Sequence[float]) -> PixelTensor:
    """Scale pixels to [0, 1], then shift/scale per channel: (v/255 - mean) / std.

    Arithmetic runs in float32, matching the rest of the token path.
    """
    mean_arr, std_arr = _check_norm_constants(mean, std)
    values = img.data.astype(np.float32)
    values /= np.float32(255.0)
    values -= mean_arr.astype(np.float32)
    values /= std_arr.astype(np.float32)
    return PixelTensor(np.ascontiguousarray(values.transpose(2, 0, 1)))


def denormalize(tensor: PixelTensor, mean: Sequence[float], std: Sequence[float]) -> np.ndarray:
    """Invert :func:`normalize`; returns float64 pixel values, (h, w, 3)."""
    mean_arr, std_arr = _check_norm_constants(mean, std)
    interleaved = tensor.data.astype(np.float64).transpose(1, 2, 0)
    return (interleaved * std_arr + mean_arr) * 255.0


def _check_norm_constants(mean: Sequence[float], std: Sequence[float]):
    mean_arr = np.asarray(mean, dtype=np.float64)
    std_arr = np.asarray(std, dtype=np.float64)
    if mean_arr.shape != (3,) or std_arr.shape != (3,):
        raise InvalidNormalization("mean and std must each have exactly 3 components")
    if np.any(std_arr == 0.0):
        raise InvalidNormalization("std components must be nonzero")
    return mean_arr, std_arr
