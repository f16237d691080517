"""Corpus-level zoom-in ratio statistics.

For each image the zoom-in ratio is the longest dimension of its
high-resolution resize target divided by the longest native dimension.  The
aggregate is an exact empirical step CDF plus "fraction at least t"
summaries; no smoothing is applied, so shards can be merged exactly and every
number is reproducible from the records alone.

Corpus manifest format: one record per line, tab-separated.  Three columns
``image_id <TAB> width <TAB> height`` give the dimensions directly; two
columns ``image_id <TAB> path`` name an image file whose dimensions are read
by decoding it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyCorpus, FormatError, InvalidDimension
from .gridplan import PipelineConfig, plan_crops
from .imaging import decode_image


@dataclass(frozen=True)
class ZoomRecord:
    """Zoom-in ratio for a single image."""

    image_id: str
    native_w: int
    native_h: int
    high_target_w: int
    high_target_h: int
    ratio: float


@dataclass(frozen=True)
class ZoomStats:
    """Exact empirical distribution of zoom-in ratios."""

    n: int
    sorted_ratios: tuple[float, ...]
    thresholds: tuple[float, ...]
    fraction_at_least: dict[float, float]
    cdf_points: tuple[tuple[float, float], ...]

    @classmethod
    def from_ratios(cls, ratios: Sequence[float], thresholds: Sequence[float]) -> "ZoomStats":
        if not ratios:
            raise EmptyCorpus("no records to aggregate")
        ordered = tuple(sorted(ratios))
        n = len(ordered)
        fractions = {
            float(t): sum(1 for r in ordered if r >= t) / n for t in thresholds
        }
        points = []
        for i, r in enumerate(ordered):
            if i + 1 == n or ordered[i + 1] != r:
                points.append((r, (i + 1) / n))
        return cls(
            n=n,
            sorted_ratios=ordered,
            thresholds=tuple(float(t) for t in thresholds),
            fraction_at_least=fractions,
            cdf_points=tuple(points),
        )

    def merge(self, other: "ZoomStats") -> "ZoomStats":
        """Combine disjoint shards; equals stats computed over the union."""
        if self.thresholds != other.thresholds:
            raise ValueError("cannot merge stats with different thresholds")
        return ZoomStats.from_ratios(self.sorted_ratios + other.sorted_ratios, self.thresholds)


def zoom_record(
    image_id: str, w: int, h: int, config: PipelineConfig, tier: str = "high"
) -> ZoomRecord:
    """Plan one image and derive its zoom-in ratio.

    ``tier`` selects which resize target the ratio is taken against; the
    default is the high-resolution target.
    """
    if tier not in ("high", "medium"):
        raise ValueError(f"tier must be 'high' or 'medium', got {tier!r}")
    plan = plan_crops(w, h, config)
    target = plan.high_target if tier == "high" else plan.medium_target
    return ZoomRecord(
        image_id=image_id,
        native_w=w,
        native_h=h,
        high_target_w=target[0],
        high_target_h=target[1],
        ratio=max(target) / max(w, h),
    )


def corpus_zoom_stats(
    records: Iterable[tuple[str, int, int]],
    config: PipelineConfig,
    thresholds: Sequence[float],
    tier: str = "high",
) -> ZoomStats:
    """Aggregate zoom ratios over (image_id, width, height) records."""
    ratios = []
    for image_id, w, h in records:
        if w < 1 or h < 1:
            raise InvalidDimension(f"record {image_id!r} has dimensions {w}x{h}")
        ratios.append(zoom_record(image_id, w, h, config, tier).ratio)
    if not ratios:
        raise EmptyCorpus("corpus stream contained no records")
    return ZoomStats.from_ratios(ratios, thresholds)


def emit_cdf(stats: ZoomStats, format: str = "csv") -> bytes:
    """Render the CDF points as a deterministic byte stream."""
    if format == "csv":
        lines = [f"{ratio},{fraction}" for ratio, fraction in stats.cdf_points]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "json":
        import json

        payload = [{"ratio": r, "cum_fraction": f} for r, f in stats.cdf_points]
        return (json.dumps(payload, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown CDF format {format!r}")


def read_corpus_manifest(path, image_root=None) -> list[tuple[str, int, int]]:
    """Load (image_id, width, height) records from a manifest file.

    Relative paths in decode mode are resolved against ``image_root`` when
    given, otherwise against the manifest's own directory.
    """
    manifest = Path(path)
    base = Path(image_root) if image_root is not None else manifest.parent
    records = []
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) == 3:
            try:
                records.append((cols[0], int(cols[1]), int(cols[2])))
            except ValueError as exc:
                raise FormatError(f"{manifest}:{lineno}: bad dimensions {cols[1]!r}x{cols[2]!r}") from exc
        elif len(cols) == 2:
            img_path = Path(cols[1])
            if not img_path.is_absolute():
                img_path = base / img_path
            img = decode_image(img_path.read_bytes())
            records.append((cols[0], img.width, img.height))
        else:
            raise FormatError(f"{manifest}:{lineno}: expected 2 or 3 tab-separated columns")
    return records
