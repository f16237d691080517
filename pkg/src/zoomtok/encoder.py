"""Per-crop visual token encoding and projection into the language dimension.

The reference encoder is a fixed linear patch embedding: each ``p x p`` patch
is flattened channel-major (``v[c*p*p + py*p + px]``) and multiplied by a
weight matrix with no bias.  Weight entry ``W[i, j]`` is the SplitMix64 draw
numbered ``i * (3*p*p) + j + 1`` for the given seed, mapped uniformly into
``[-1/sqrt(3*p*p), +1/sqrt(3*p*p)]`` and cast to float32, so the whole map is
reproducible from the seed alone.  Linearity makes exact oracles possible;
anything heavier (a real ViT) plugs in behind the same ``CropEncoder``
protocol.

Projection weight file format ("DFPJ"): magic ``DFPJ``, u32 in_dim,
u32 out_dim (little-endian), then ``out_dim * in_dim`` float32 weights
row-major, then ``out_dim`` float32 bias values.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import DimensionMismatch, FormatError, InvalidPatchSize
from .imaging import PixelTensor
from .rng import uniform_stream

PROJECTION_MAGIC = b"DFPJ"


@dataclass(frozen=True)
class TokenGrid:
    """Row-major grid of token vectors; ``data`` has shape (rows, cols, dim)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise DimensionMismatch(f"expected (rows, cols, dim) array, got shape {self.data.shape}")
        if not np.isfinite(arr).all():
            raise DimensionMismatch("token grid contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@runtime_checkable
class CropEncoder(Protocol):
    """Anything that turns a square pixel tensor into a token grid."""

    patch_size: int
    dim: int

    def encode(self, crop: PixelTensor) -> TokenGrid: ...


class ReferenceEncoder:
    """Deterministic linear patch embedding; see module docstring."""

    def __init__(self, seed: int, dim: int, patch_size: int):
        if patch_size < 1:
            raise InvalidPatchSize(f"patch size {patch_size} out of range")
        if dim < 1:
            raise InvalidPatchSize(f"token dimension {dim} out of range")
        self.seed = seed
        self.dim = dim
        self.patch_size = patch_size
        fan_in = 3 * patch_size * patch_size
        scale = 1.0 / math.sqrt(fan_in)
        flat = uniform_stream(seed, dim * fan_in, -scale, scale)
        self._weights = flat.astype(np.float32).reshape(dim, fan_in)

    @property
    def weights(self) -> np.ndarray:
        """(dim, 3*p*p) float32 patch embedding matrix."""
        return self._weights

    def encode(self, crop: PixelTensor) -> TokenGrid:
        p = self.patch_size
        if crop.height != crop.width:
            raise DimensionMismatch(f"crop must be square, got {crop.width}x{crop.height}")
        if crop.height % p != 0:
            raise DimensionMismatch(f"crop side {crop.height} is not divisible by patch size {p}")
        side = crop.height // p
        patches = (
            crop.data.reshape(3, side, p, side, p)
            .transpose(1, 3, 0, 2, 4)
            .reshape(side * side, 3 * p * p)
        )
        tokens = patches @ self._weights.T
        return TokenGrid(tokens.reshape(side, side, self.dim))


def make_reference_encoder(seed: int, dim: int, patch_size: int = 14) -> ReferenceEncoder:
    """Build the seeded linear stand-in encoder."""
    return ReferenceEncoder(seed, dim, patch_size)


def encode_crop(enc: CropEncoder, crop: PixelTensor, resolution: int) -> TokenGrid:
    """Encode one crop, enforcing the configured encoder resolution."""
    if (crop.width, crop.height) != (resolution, resolution):
        raise DimensionMismatch(
            f"crop is {crop.width}x{crop.height}, encoder expects {resolution}x{resolution}"
        )
    if resolution % enc.patch_size != 0:
        raise DimensionMismatch(
            f"resolution {resolution} is not divisible by patch size {enc.patch_size}"
        )
    grid = enc.encode(crop)
    side = resolution // enc.patch_size
    if grid.rows != side or grid.cols != side or grid.dim != enc.dim:
        raise DimensionMismatch(
            f"encoder produced {grid.rows}x{grid.cols}x{grid.dim}, expected {side}x{side}x{enc.dim}"
        )
    return grid


@dataclass(frozen=True)
class ProjectionMap:
    """Affine map carrying tokens into the language-model dimension."""

    weights: np.ndarray  # (out_dim, in_dim) float32
    bias: np.ndarray  # (out_dim,) float32

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        b = np.ascontiguousarray(self.bias, dtype=np.float32)
        if w.ndim != 2:
            raise DimensionMismatch(f"weights must be 2-D, got shape {self.weights.shape}")
        if b.shape != (w.shape[0],):
            raise DimensionMismatch(f"bias shape {b.shape} does not match {w.shape[0]} output rows")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise DimensionMismatch("projection contains non-finite values")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "ProjectionMap":
        return cls(np.eye(dim, dtype=np.float32), np.zeros(dim, dtype=np.float32))

    @classmethod
    def seeded(cls, seed: int, in_dim: int, out_dim: int) -> "ProjectionMap":
        """Weights then bias drawn uniformly from [-0.1, 0.1] in one stream."""
        flat = uniform_stream(seed, out_dim * in_dim + out_dim, -0.1, 0.1).astype(np.float32)
        weights = flat[: out_dim * in_dim].reshape(out_dim, in_dim)
        return cls(weights, flat[out_dim * in_dim :])

    def to_bytes(self) -> bytes:
        header = struct.pack("<4sII", PROJECTION_MAGIC, self.in_dim, self.out_dim)
        return header + self.weights.astype("<f4").tobytes() + self.bias.astype("<f4").tobytes()

    def to_file(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProjectionMap":
        if len(data) < 12 or data[:4] != PROJECTION_MAGIC:
            raise FormatError("not a DFPJ projection file")
        _, in_dim, out_dim = struct.unpack_from("<4sII", data, 0)
        if in_dim < 1 or out_dim < 1:
            raise FormatError(f"projection dims {in_dim}x{out_dim} out of range")
        expected = 12 + 4 * (out_dim * in_dim + out_dim)
        if len(data) != expected:
            raise FormatError(f"projection file is {len(data)} bytes, expected {expected}")
        values = np.frombuffer(data, dtype="<f4", offset=12)
        weights = values[: out_dim * in_dim].reshape(out_dim, in_dim)
        return cls(weights.copy(), values[out_dim * in_dim :].copy())

    @classmethod
    def from_file(cls, path) -> "ProjectionMap":
        return cls.from_bytes(Path(path).read_bytes())


def project(tokens: TokenGrid, p: ProjectionMap) -> TokenGrid:
    """Apply ``weights @ v + bias`` to every token; grid shape is unchanged."""
    if tokens.dim != p.in_dim:
        raise DimensionMismatch(f"token dim {tokens.dim} does not match projection input {p.in_dim}")
    flat = tokens.data.reshape(-1, tokens.dim) @ p.weights.T + p.bias
    return TokenGrid(flat.reshape(tokens.rows, tokens.cols, p.out_dim))
