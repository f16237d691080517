"""Command-line driver: batch tokenization, corpus stats, inspection, bench.

Configuration precedence is command line > config file > built-in defaults.
The config file is a JSON object whose keys mirror
``PipelineConfig.to_mapping()``.  Exit codes: 0 success, 1 partial or data
failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .aggregator import read_token_file, token_budget, tokenize_image, write_token_file
from .analytics import corpus_zoom_stats, emit_cdf, read_corpus_manifest
from .encoder import ProjectionMap, make_reference_encoder
from .errors import ConfigError, IndivisibleGrid, PipelineError
from .gridplan import SEPARATOR_POLICIES, PipelineConfig, plan_crops, zoom_ratio
from .imaging import ImageBuffer, decode_image
from .rng import SplitMix64, u64_stream

DEFAULT_SEED = 0


@dataclass
class ManifestEntry:
    image_id: str
    input: str
    output: str | None
    status: str  # "ok" | "failed"
    error: str | None


@dataclass
class RunManifest:
    config_digest: str
    entries: list[ManifestEntry]

    def to_json(self) -> str:
        payload = {
            "config_digest": self.config_digest,
            "entries": [vars(e) for e in self.entries],
        }
        return json.dumps(payload, indent=2) + "\n"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="weight seed (default 0)")
    parser.add_argument("--encoder-dim", type=int, metavar="N")
    parser.add_argument("--proj-dim", type=int, metavar="N")
    parser.add_argument("--stride", type=int, metavar="N")
    parser.add_argument("--separator-policy", choices=SEPARATOR_POLICIES)


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    mapping: dict = {}
    if args.config:
        try:
            mapping = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(mapping, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
    overrides = {
        "encoder_dim": args.encoder_dim,
        "projection_dim": args.proj_dim,
        "pool_stride": args.stride,
        "separator_policy": args.separator_policy,
    }
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.from_mapping(mapping)


def _build_weights(args: argparse.Namespace, config: PipelineConfig):
    encoder = make_reference_encoder(args.seed, config.encoder_dim, config.patch_size)
    proj_file = getattr(args, "proj_file", None)
    if proj_file:
        proj = ProjectionMap.from_file(proj_file)
        if proj.in_dim != config.encoder_dim or proj.out_dim != config.projection_dim:
            raise ConfigError(
                f"projection file is {proj.in_dim}->{proj.out_dim}, config wants "
                f"{config.encoder_dim}->{config.projection_dim}"
            )
    else:
        # Projection weights come from the seed after the encoder's stream.
        proj = ProjectionMap.seeded(args.seed + 1, config.encoder_dim, config.projection_dim)
    return encoder, proj


def run_tokenize(args: argparse.Namespace) -> int:
    config = _load_config(args)
    encoder, proj = _build_weights(args, config)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(args.manifest) if args.manifest else out_dir / "manifest.json"

    inputs = [Path(p) for p in args.inputs]
    used_ids: set[str] = set()
    planned = []
    for path in inputs:
        image_id = path.stem
        k = 2
        while image_id in used_ids:
            image_id = f"{path.stem}-{k}"
            k += 1
        used_ids.add(image_id)
        planned.append((image_id, path, out_dir / f"{image_id}.dftk"))

    def process(item) -> ManifestEntry:
        image_id, path, out_path = item
        try:
            seq, _ = tokenize_image(decode_image(path.read_bytes()), encoder, proj, config)
            write_token_file(seq, out_path)
            return ManifestEntry(image_id, str(path), str(out_path), "ok", None)
        except (PipelineError, OSError) as exc:
            return ManifestEntry(image_id, str(path), None, "failed", f"{type(exc).__name__}: {exc}")

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            entries = list(pool.map(process, planned))
    else:
        entries = [process(item) for item in planned]

    manifest = RunManifest(config.digest(), entries)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")

    failed = sum(1 for e in entries if e.status != "ok")
    for e in entries:
        line = f"{e.image_id}: {e.status}" + (f" ({e.error})" if e.error else "")
        print(line)
    print(f"{len(entries) - failed}/{len(entries)} ok, manifest: {manifest_path}")
    return 1 if failed else 0


def run_stats(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = read_corpus_manifest(args.manifest)
    thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    stats = corpus_zoom_stats(records, config, thresholds, tier=args.tier)

    payload = emit_cdf(stats, format=args.format)
    if args.out == "-":
        sys.stdout.buffer.write(payload)
    else:
        Path(args.out).write_bytes(payload)
    print(f"n = {stats.n}")
    for t in thresholds:
        print(f"fraction_at_least {t:g} = {stats.fraction_at_least[t]}")
    return 0


def run_inspect(args: argparse.Namespace) -> int:
    seq = read_token_file(Path(args.token_file).read_bytes())
    print(f"version: 1")
    print(f"dim: {seq.dim}")
    print(f"entries: {seq.n_entries}")
    print(f"image tokens: {seq.n_image_tokens}")
    print(f"separators: {seq.n_separators}")
    print(f"segments: {len(seq.segments)}")
    for i, seg in enumerate(seq.segments):
        print(f"  [{i}] {seg.kind} crop {seg.crop_index}: {seg.token_count} tokens")
    return 0


def run_budget(args: argparse.Namespace) -> int:
    config = _load_config(args)
    budget = token_budget(config)
    print(json.dumps(vars(budget) | {"config_digest": config.digest()}, indent=2))
    return 0


def run_plan(args: argparse.Namespace) -> int:
    config = _load_config(args)
    plan = plan_crops(args.width, args.height, config)
    payload = {
        "native_dims": list(plan.native_dims),
        "low_target": list(plan.low_target),
        "medium_grid": [plan.medium_grid.cols, plan.medium_grid.rows],
        "medium_target": list(plan.medium_target),
        "medium_rects": [[r.x, r.y, r.w, r.h] for r in plan.medium_rects],
        "high_grid": [plan.high_grid.cols, plan.high_grid.rows],
        "high_target": list(plan.high_target),
        "high_rects": [[r.x, r.y, r.w, r.h] for r in plan.high_rects],
        "zoom_ratio": zoom_ratio(plan),
    }
    print(json.dumps(payload, indent=2))
    return 0


def run_bench(args: argparse.Namespace) -> int:
    config = _load_config(args)
    encoder, proj = _build_weights(args, config)
    rng = SplitMix64(args.seed)
    images = []
    for i in range(args.count):
        w = rng.randint(50, args.max_dim)
        h = rng.randint(50, args.max_dim)
        n = w * h * 3
        words = u64_stream(args.seed * 1000 + i, (n + 7) // 8)
        pixels = words.astype("<u8").view("u1")[:n].reshape(h, w, 3)
        images.append(ImageBuffer(pixels.copy()))

    start = time.perf_counter()
    total_tokens = 0
    for img in images:
        seq, _ = tokenize_image(img, encoder, proj, config)
        total_tokens += seq.n_image_tokens
    elapsed = time.perf_counter() - start

    print(f"images: {len(images)}")
    print(f"elapsed: {elapsed:.3f} s")
    print(f"images/second: {len(images) / elapsed:.3f}")
    print(f"tokens/second: {total_tokens / elapsed:.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zoomtok", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="tokenize images into DFTK token files")
    _add_config_flags(p)
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.add_argument("--manifest", metavar="PATH", help="run manifest path (default OUT/manifest.json)")
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.add_argument("--proj-file", metavar="PATH", help="DFPJ projection weights")
    p.add_argument("inputs", nargs="+", metavar="IMAGE")
    p.set_defaults(func=run_tokenize)

    p = sub.add_parser("stats", help="zoom-ratio statistics over a corpus manifest")
    _add_config_flags(p)
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--out", default="-", metavar="PATH", help="CDF output file, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--thresholds", default="1,2,4", metavar="LIST")
    p.add_argument("--tier", choices=("high", "medium"), default="high")
    p.set_defaults(func=run_stats)

    p = sub.add_parser("inspect", help="summarize a DFTK token file")
    p.add_argument("token_file", metavar="FILE")
    p.set_defaults(func=run_inspect)

    p = sub.add_parser("budget", help="print the analytic token budget as JSON")
    _add_config_flags(p)
    p.set_defaults(func=run_budget)

    p = sub.add_parser("plan", help="print the crop plan for given dimensions as JSON")
    _add_config_flags(p)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.set_defaults(func=run_plan)

    p = sub.add_parser("bench", help="throughput on a synthetic corpus")
    _add_config_flags(p)
    p.add_argument("--count", type=int, default=10, metavar="N")
    p.add_argument("--max-dim", type=int, default=2000, metavar="PX")
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.set_defaults(func=run_bench)

    return parser


def main(argv=None) -> int:
    # Keep stderr parseable: numba warns about old TBB builds at first
    # parallel call, which is environment noise for a batch tool.
    import warnings

    from numba import NumbaWarning

    warnings.filterwarnings("ignore", category=NumbaWarning)

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IndivisibleGrid) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
