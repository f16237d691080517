"""Token pooling and assembly of the final image token sequence.

A tokenized image is one low-resolution crop kept at full token count plus
medium- and high-resolution crops pooled down to a small square grid each.
Segments are ordered low, then medium crops row-major, then high crops
row-major; separator entries are inserted between segments according to the
configured policy.  With the default configuration that is
576 + 4*36 + 36*36 = 2016 image tokens across 41 segments joined by 40
separators.

Token file format ("DFTK"): magic ``DFTK``, u32 version=1, u32 d_lm,
u32 n_entries, u32 n_image_tokens, u32 n_separators (little-endian), then one
6-byte record per entry (u8 tag: 0 image / 1 separator, u8 kind: 0 low /
1 medium / 2 high, u16 crop_index, u8 grid_row, u8 grid_col; separator
records are zero-filled after the tag), then every entry's vector as float32
little-endian in entry order.  Separator vectors are written too, so the
vector block is always ``n_entries * d_lm`` floats.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .encoder import CropEncoder, ProjectionMap, TokenGrid, encode_crop, project
from .errors import (
    DimensionMismatch,
    FormatError,
    IndivisibleGrid,
    SegmentCountMismatch,
)
from .gridplan import CropPlan, PipelineConfig, plan_crops
from .imaging import ImageBuffer, extract_tile, normalize, resize

TOKEN_MAGIC = b"DFTK"
TOKEN_VERSION = 1

_KIND_CODES = {"low": 0, "medium": 1, "high": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class Segment:
    """One contiguous run of image tokens from a single crop."""

    kind: str  # "low" | "medium" | "high"
    crop_index: int
    token_count: int


@dataclass(frozen=True)
class ImageToken:
    """Entry tag for an image token: which segment, and where in its grid."""

    segment_id: int
    grid_row: int
    grid_col: int


@dataclass(frozen=True)
class Separator:
    """Entry tag marking a boundary between segments."""


Entry = Union[ImageToken, Separator]


@dataclass(frozen=True)
class TokenSequence:
    """Final ordered sequence of projected tokens plus layout metadata."""

    tokens: np.ndarray  # (n_entries, dim) float32, separators included
    entries: tuple[Entry, ...]
    segments: tuple[Segment, ...]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.tokens, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] != len(self.entries):
            raise DimensionMismatch(
                f"token array shape {self.tokens.shape} does not match {len(self.entries)} entries"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "tokens", arr)

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    @property
    def n_entries(self) -> int:
        return len(self.entries)

    @property
    def n_image_tokens(self) -> int:
        return sum(s.token_count for s in self.segments)

    @property
    def n_separators(self) -> int:
        return self.n_entries - self.n_image_tokens


@dataclass(frozen=True)
class TokenBudget:
    """Analytic token counts per resolution tier."""

    low: int
    medium: int
    high: int
    total: int
    separators: int


def mean_pool(grid: TokenGrid, stride: int) -> TokenGrid:
    """Replace each non-overlapping stride x stride block with its mean."""
    if stride < 1:
        raise IndivisibleGrid(f"stride {stride} out of range")
    if grid.rows % stride != 0 or grid.cols % stride != 0:
        raise IndivisibleGrid(
            f"grid {grid.rows}x{grid.cols} is not divisible by stride {stride}"
        )
    blocked = grid.data.reshape(grid.rows // stride, stride, grid.cols // stride, stride, grid.dim)
    pooled = blocked.mean(axis=(1, 3), dtype=np.float32)
    return TokenGrid(pooled)


def token_budget(config: PipelineConfig) -> TokenBudget:
    """Token counts implied by the configuration alone.

    An empty grid set contributes zero crops, which lets test configurations
    disable a tier without running the planner.
    """
    low = config.grid_side**2
    per_crop = config.pooled_side**2
    medium = config.medium_crop_count * per_crop
    high = config.high_crop_count * per_crop
    n_crops = config.medium_crop_count + config.high_crop_count
    if config.separator_policy == "between_all":
        separators = n_crops  # (1 + n_crops) segments -> n_crops boundaries
    elif config.separator_policy == "between_crops_only":
        separators = max(0, n_crops - 1)
    else:
        separators = 0
    return TokenBudget(low=low, medium=medium, high=high, total=low + medium + high, separators=separators)


def _wants_separator(prev_kind: str, next_kind: str, policy: str) -> bool:
    if policy == "between_all":
        return True
    if policy == "between_crops_only":
        return prev_kind != "low" and next_kind != "low"
    return False


def assemble_sequence(
    low: TokenGrid,
    medium: Sequence[TokenGrid],
    high: Sequence[TokenGrid],
    config: PipelineConfig,
) -> TokenSequence:
    """Flatten crop grids row-major into one sequence with separators.

    ``low`` must be the unpooled full token grid; ``medium`` and ``high``
    must already be pooled and are consumed in row-major crop order.
    """
    if len(medium) != config.medium_crop_count:
        raise SegmentCountMismatch(
            f"expected {config.medium_crop_count} medium grids, got {len(medium)}"
        )
    if len(high) != config.high_crop_count:
        raise SegmentCountMismatch(f"expected {config.high_crop_count} high grids, got {len(high)}")
    _check_grid(low, config.grid_side, config.projection_dim, "low")
    for i, g in enumerate(medium):
        _check_grid(g, config.pooled_side, config.projection_dim, f"medium[{i}]")
    for i, g in enumerate(high):
        _check_grid(g, config.pooled_side, config.projection_dim, f"high[{i}]")

    ordered = [("low", 0, low)]
    ordered += [("medium", i, g) for i, g in enumerate(medium)]
    ordered += [("high", i, g) for i, g in enumerate(high)]

    separator_vec = np.full((1, config.projection_dim), config.separator_fill, dtype=np.float32)
    blocks: list[np.ndarray] = []
    entries: list[Entry] = []
    segments: list[Segment] = []
    for kind, crop_index, grid in ordered:
        if segments and _wants_separator(segments[-1].kind, kind, config.separator_policy):
            blocks.append(separator_vec)
            entries.append(Separator())
        segment_id = len(segments)
        segments.append(Segment(kind, crop_index, grid.rows * grid.cols))
        blocks.append(grid.data.reshape(-1, grid.dim))
        entries.extend(
            ImageToken(segment_id, r, c) for r in range(grid.rows) for c in range(grid.cols)
        )
    return TokenSequence(np.concatenate(blocks, axis=0), tuple(entries), tuple(segments))


def _check_grid(grid: TokenGrid, side: int, dim: int, label: str) -> None:
    if grid.rows != side or grid.cols != side:
        raise DimensionMismatch(f"{label} grid is {grid.rows}x{grid.cols}, expected {side}x{side}")
    if grid.dim != dim:
        raise DimensionMismatch(f"{label} grid dim {grid.dim}, expected {dim}")


def tokenize_image(
    img: ImageBuffer,
    enc: CropEncoder,
    proj: ProjectionMap,
    config: PipelineConfig,
) -> tuple[TokenSequence, CropPlan]:
    """Run the full pipeline on one image.

    Plans the crops, resizes the native image to all three targets, encodes
    every crop with the shared encoder, projects into the language dimension,
    pools the medium/high crops, and assembles the final sequence.  The
    low-resolution crop is projected but never pooled.
    """
    if enc.dim != config.encoder_dim:
        raise DimensionMismatch(f"encoder dim {enc.dim} does not match config {config.encoder_dim}")
    if enc.patch_size != config.patch_size:
        raise DimensionMismatch(
            f"encoder patch size {enc.patch_size} does not match config {config.patch_size}"
        )
    if proj.in_dim != config.encoder_dim or proj.out_dim != config.projection_dim:
        raise DimensionMismatch(
            f"projection is {proj.in_dim}->{proj.out_dim}, config wants "
            f"{config.encoder_dim}->{config.projection_dim}"
        )

    plan = plan_crops(img.width, img.height, config)
    mean, std = config.normalization_mean, config.normalization_std

    def encode_tile(tile: ImageBuffer) -> TokenGrid:
        tensor = normalize(tile, mean, std)
        return project(encode_crop(enc, tensor, config.resolution), proj)

    low = encode_tile(resize(img, *plan.low_target))

    medium_img = resize(img, *plan.medium_target)
    medium = [
        mean_pool(encode_tile(extract_tile(medium_img, rect)), config.pool_stride)
        for rect in plan.medium_rects
    ]
    high_img = resize(img, *plan.high_target)
    high = [
        mean_pool(encode_tile(extract_tile(high_img, rect)), config.pool_stride)
        for rect in plan.high_rects
    ]
    return assemble_sequence(low, medium, high, config), plan


def token_file_bytes(seq: TokenSequence) -> bytes:
    """Serialize a sequence into the DFTK byte layout."""
    parts = [
        struct.pack(
            "<4sIIIII",
            TOKEN_MAGIC,
            TOKEN_VERSION,
            seq.dim,
            seq.n_entries,
            seq.n_image_tokens,
            seq.n_separators,
        )
    ]
    for entry in seq.entries:
        if isinstance(entry, Separator):
            parts.append(struct.pack("<BBHBB", 1, 0, 0, 0, 0))
            continue
        segment = seq.segments[entry.segment_id]
        if segment.crop_index > 0xFFFF or entry.grid_row > 0xFF or entry.grid_col > 0xFF:
            raise FormatError("entry coordinates exceed the DFTK field widths")
        parts.append(
            struct.pack(
                "<BBHBB",
                0,
                _KIND_CODES[segment.kind],
                segment.crop_index,
                entry.grid_row,
                entry.grid_col,
            )
        )
    parts.append(seq.tokens.astype("<f4").tobytes())
    return b"".join(parts)


def write_token_file(seq: TokenSequence, path) -> None:
    Path(path).write_bytes(token_file_bytes(seq))


def read_token_file(source) -> TokenSequence:
    """Parse DFTK bytes (or a path) back into a TokenSequence.

    Raises FormatError on a bad magic, version, truncation, or any header
    count that disagrees with the entry records.
    """
    data = source if isinstance(source, (bytes, bytearray)) else Path(source).read_bytes()
    if len(data) < 24 or data[:4] != TOKEN_MAGIC:
        raise FormatError("not a DFTK token file")
    _, version, dim, n_entries, n_image, n_sep = struct.unpack_from("<4sIIIII", data, 0)
    if version != TOKEN_VERSION:
        raise FormatError(f"unsupported token file version {version}")
    if n_image + n_sep != n_entries:
        raise FormatError("header counts are inconsistent")
    expected = 24 + 6 * n_entries + 4 * n_entries * dim
    if len(data) != expected:
        raise FormatError(f"token file is {len(data)} bytes, expected {expected}")

    entries: list[Entry] = []
    segments: list[Segment] = []
    current: tuple[str, int] | None = None
    seen_image = 0
    offset = 24
    for _ in range(n_entries):
        tag, kind_code, crop_index, grid_row, grid_col = struct.unpack_from("<BBHBB", data, offset)
        offset += 6
        if tag == 1:
            entries.append(Separator())
            continue
        if tag != 0:
            raise FormatError(f"unknown entry tag {tag}")
        if kind_code not in _KIND_NAMES:
            raise FormatError(f"unknown segment kind {kind_code}")
        key = (_KIND_NAMES[kind_code], crop_index)
        if key != current:
            current = key
            segments.append(Segment(key[0], key[1], 0))
        segments[-1] = Segment(key[0], key[1], segments[-1].token_count + 1)
        entries.append(ImageToken(len(segments) - 1, grid_row, grid_col))
        seen_image += 1
    if seen_image != n_image:
        raise FormatError(f"found {seen_image} image tokens, header says {n_image}")

    vectors = np.frombuffer(data, dtype="<f4", offset=offset).reshape(n_entries, dim)
    return TokenSequence(vectors.copy(), tuple(entries), tuple(segments))
