"""Aspect-matched grid selection and low/medium/high crop planning.

An input of any size is mapped to three resize targets: one square
low-resolution frame, and a medium and a high target chosen from small sets
of (cols, rows) grids.  A grid is picked by minimizing the absolute
log-aspect gap ``|ln(w * rows) - ln(h * cols)|``, which treats wide and tall
mismatches symmetrically.  Ties prefer the most square grid (smallest
``|cols - rows|``), then the wider one (largest ``cols``), so selection is
total and deterministic.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, EmptyGridSet, IndivisibleGrid, InvalidDimension
from .imaging import CropRect

#: Per-channel constants matching the pretrained contrastive encoder's
#: preprocessing; overridable through PipelineConfig.
DEFAULT_MEAN = (0.48145466, 0.4578275, 0.40821073)
DEFAULT_STD = (0.26862954, 0.26130258, 0.27577711)

SEPARATOR_POLICIES = ("between_all", "between_crops_only", "none")


@dataclass(frozen=True)
class GridSpec:
    """A (columns, rows) tiling choice."""

    cols: int
    rows: int

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1:
            raise ConfigError(f"grid ({self.cols},{self.rows}) must have positive dimensions")

    @property
    def crop_count(self) -> int:
        return self.cols * self.rows

    def transpose(self) -> "GridSpec":
        return GridSpec(self.rows, self.cols)


def _as_grids(grids: Iterable) -> tuple[GridSpec, ...]:
    out = []
    for g in grids:
        if isinstance(g, GridSpec):
            out.append(g)
        else:
            cols, rows = g
            out.append(GridSpec(int(cols), int(rows)))
    return tuple(out)


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline-wide settings; immutable and shareable across threads.

    ``resolution`` is the square encoder input size R.  Every grid resize
    target is ``cols*R x rows*R`` and every crop is ``R x R``.  The token
    grid per crop has side ``R / patch_size``, which must divide evenly by
    ``pool_stride`` so pooled crops come out square.
    """

    resolution: int = 336
    patch_size: int = 14
    medium_grids: tuple[GridSpec, ...] = (GridSpec(2, 2), GridSpec(1, 4), GridSpec(4, 1))
    high_grids: tuple[GridSpec, ...] = (GridSpec(6, 6), GridSpec(3, 12), GridSpec(12, 3))
    pool_stride: int = 4
    encoder_dim: int = 64
    projection_dim: int = 128
    normalization_mean: tuple[float, float, float] = DEFAULT_MEAN
    normalization_std: tuple[float, float, float] = DEFAULT_STD
    separator_policy: str = "between_all"
    separator_fill: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "medium_grids", _as_grids(self.medium_grids))
        object.__setattr__(self, "high_grids", _as_grids(self.high_grids))
        object.__setattr__(self, "normalization_mean", tuple(float(v) for v in self.normalization_mean))
        object.__setattr__(self, "normalization_std", tuple(float(v) for v in self.normalization_std))
        if self.resolution < 1 or self.patch_size < 1:
            raise ConfigError("resolution and patch_size must be positive")
        if self.resolution % self.patch_size != 0:
            raise ConfigError(
                f"resolution {self.resolution} is not divisible by patch size {self.patch_size}"
            )
        if self.pool_stride < 1:
            raise ConfigError("pool_stride must be positive")
        if self.grid_side % self.pool_stride != 0:
            raise IndivisibleGrid(
                f"token grid side {self.grid_side} is not divisible by stride {self.pool_stride}"
            )
        if self.encoder_dim < 1 or self.projection_dim < 1:
            raise ConfigError("encoder_dim and projection_dim must be positive")
        for name, grids in (("medium_grids", self.medium_grids), ("high_grids", self.high_grids)):
            counts = {g.crop_count for g in grids}
            if len(counts) > 1:
                raise ConfigError(f"every grid in {name} must yield the same crop count, got {sorted(counts)}")
        if len(self.normalization_mean) != 3 or len(self.normalization_std) != 3:
            raise ConfigError("normalization constants must have 3 components")
        if any(v == 0.0 for v in self.normalization_std):
            raise ConfigError("normalization std components must be nonzero")
        if self.separator_policy not in SEPARATOR_POLICIES:
            raise ConfigError(
                f"separator_policy must be one of {SEPARATOR_POLICIES}, got {self.separator_policy!r}"
            )

    @property
    def grid_side(self) -> int:
        """Token grid side per crop: resolution / patch_size."""
        return self.resolution // self.patch_size

    @property
    def pooled_side(self) -> int:
        return self.grid_side // self.pool_stride

    @property
    def medium_crop_count(self) -> int:
        return self.medium_grids[0].crop_count if self.medium_grids else 0

    @property
    def high_crop_count(self) -> int:
        return self.high_grids[0].crop_count if self.high_grids else 0

    def to_mapping(self) -> dict:
        return {
            "resolution": self.resolution,
            "patch_size": self.patch_size,
            "medium_grids": [[g.cols, g.rows] for g in self.medium_grids],
            "high_grids": [[g.cols, g.rows] for g in self.high_grids],
            "pool_stride": self.pool_stride,
            "encoder_dim": self.encoder_dim,
            "projection_dim": self.projection_dim,
            "normalization_mean": list(self.normalization_mean),
            "normalization_std": list(self.normalization_std),
            "separator_policy": self.separator_policy,
            "separator_fill": self.separator_fill,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "PipelineConfig":
        known = set(cls().to_mapping())
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**{str(k): v for k, v in mapping.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc

    def digest(self) -> str:
        """Content hash over every effective field; stable across key order."""
        canonical = json.dumps(self.to_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CropPlan:
    """Resolved resize targets and crop rectangles for one image."""

    native_dims: tuple[int, int]
    low_target: tuple[int, int]
    medium_grid: GridSpec
    medium_target: tuple[int, int]
    medium_rects: tuple[CropRect, ...]
    high_grid: GridSpec
    high_target: tuple[int, int]
    high_rects: tuple[CropRect, ...]


def _aspect_gap(w: int, h: int, grid: GridSpec) -> float:
    # |ln(w/h) - ln(cols/rows)| written over integer products so that the
    # value is exactly symmetric under (w, h, grid) -> (h, w, transpose).
    return abs(math.log(w * grid.rows) - math.log(h * grid.cols))


def select_grid(w: int, h: int, grids: Sequence[GridSpec]) -> GridSpec:
    """Pick the grid whose aspect ratio is log-closest to w:h."""
    if w < 1 or h < 1:
        raise InvalidDimension(f"image dimensions {w}x{h} out of range")
    grids = _as_grids(grids)
    if not grids:
        raise EmptyGridSet("cannot select a grid from an empty set")
    return min(grids, key=lambda g: (_aspect_gap(w, h, g), abs(g.cols - g.rows), -g.cols))


def _tile_rects(grid: GridSpec, resolution: int) -> tuple[CropRect, ...]:
    return tuple(
        CropRect(c * resolution, r * resolution, resolution, resolution)
        for r in range(grid.rows)
        for c in range(grid.cols)
    )


def plan_crops(w: int, h: int, config: PipelineConfig) -> CropPlan:
    """Select medium/high grids independently and enumerate row-major tiles."""
    if w < 1 or h < 1:
        raise InvalidDimension(f"image dimensions {w}x{h} out of range")
    r = config.resolution
    medium = select_grid(w, h, config.medium_grids)
    high = select_grid(w, h, config.high_grids)
    return CropPlan(
        native_dims=(w, h),
        low_target=(r, r),
        medium_grid=medium,
        medium_target=(medium.cols * r, medium.rows * r),
        medium_rects=_tile_rects(medium, r),
        high_grid=high,
        high_target=(high.cols * r, high.rows * r),
        high_rects=_tile_rects(high, r),
    )


def zoom_ratio(plan: CropPlan) -> float:
    """Longest high-resolution dimension over the longest native dimension."""
    native = max(plan.native_dims)
    if native < 1:
        raise InvalidDimension("plan has non-positive native dimensions")
    return max(plan.high_target) / native
