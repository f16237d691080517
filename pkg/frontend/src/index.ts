/**
 * Bindings for the zoomtok multi-resolution image tokenizer.
 *
 * A marshaling layer only: configuration goes in as a plain object, images
 * go in as encoded bytes (PNG, JPEG, or raw DFIM), and the token sequence
 * comes back as a typed array plus layout metadata parsed from the native
 * token file, bit-identical to what the CLI writes.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { EntryTag, SegmentInfo, parseTokenFile } from "./format.js";
import { NativeError, runCli } from "./runner.js";

export { EntryTag, FormatError, SegmentInfo, SegmentKind, TokenFile, encodeFixture, parseTokenFile } from "./format.js";
export { NativeError } from "./runner.js";

export const VERSION = "0.1.0";

/** Keys mirror the native JSON config schema. */
export interface PipelineConfig {
  resolution?: number;
  patch_size?: number;
  medium_grids?: [number, number][];
  high_grids?: [number, number][];
  pool_stride?: number;
  encoder_dim?: number;
  projection_dim?: number;
  normalization_mean?: [number, number, number];
  normalization_std?: [number, number, number];
  separator_policy?: "between_all" | "between_crops_only" | "none";
  separator_fill?: number;
}

export interface TokenizeOptions {
  seed?: number;
  /** Path to a DFPJ projection weight file. */
  projFile?: string;
}

export interface TokenBudget {
  low: number;
  medium: number;
  high: number;
  total: number;
  separators: number;
  config_digest: string;
}

export interface CropPlan {
  native_dims: [number, number];
  low_target: [number, number];
  medium_grid: [number, number];
  medium_target: [number, number];
  medium_rects: [number, number, number, number][];
  high_grid: [number, number];
  high_target: [number, number];
  high_rects: [number, number, number, number][];
  zoom_ratio: number;
}

export interface BoundTokenResult {
  dim: number;
  nEntries: number;
  nImageTokens: number;
  nSeparators: number;
  /** Row-major (nEntries x dim) float32 values, separators included. */
  tokens: Float32Array;
  entryTags: EntryTag[];
  layout: SegmentInfo[];
}

/** Version string reported by the native CLI. */
export function version(): string {
  return runCli(["--version"]).stdout.trim();
}

/** View of one entry's vector inside a result's row-major token matrix. */
export function tokenRow(result: BoundTokenResult, entry: number): Float32Array {
  if (entry < 0 || entry >= result.nEntries) {
    throw new RangeError(`entry ${entry} out of range 0..${result.nEntries - 1}`);
  }
  return result.tokens.subarray(entry * result.dim, (entry + 1) * result.dim);
}

function withWorkdir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "zoomtok-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function configArgs(config: PipelineConfig | undefined, dir: string): string[] {
  if (!config || Object.keys(config).length === 0) {
    return [];
  }
  const path = join(dir, "config.json");
  writeFileSync(path, JSON.stringify(config));
  return ["--config", path];
}

/** Analytic token counts for a configuration. */
export function tokenBudget(config?: PipelineConfig): TokenBudget {
  return withWorkdir((dir) => {
    const { stdout } = runCli(["budget", ...configArgs(config, dir)]);
    return JSON.parse(stdout) as TokenBudget;
  });
}

/** Grid selection and crop rectangles for one image size. */
export function planCrops(width: number, height: number, config?: PipelineConfig): CropPlan {
  return withWorkdir((dir) => {
    const { stdout } = runCli([
      "plan",
      "--width",
      String(width),
      "--height",
      String(height),
      ...configArgs(config, dir),
    ]);
    return JSON.parse(stdout) as CropPlan;
  });
}

function manifestError(manifestPath: string): NativeError {
  try {
    const manifest = JSON.parse(readFileSync(manifestPath, "utf8"));
    const failed = manifest.entries?.find((e: { status: string }) => e.status === "failed");
    const match = /^([A-Za-z][A-Za-z0-9_]*): (.*)$/s.exec(failed?.error ?? "");
    if (match) {
      return new NativeError(match[1], match[2]);
    }
  } catch {
    // fall through to the generic error
  }
  return new NativeError("NativeError", "tokenization failed");
}

/** Tokenize one encoded image (PNG, JPEG, or DFIM bytes). */
export function tokenizeImage(
  image: Uint8Array,
  config?: PipelineConfig,
  options: TokenizeOptions = {},
): BoundTokenResult {
  return withWorkdir((dir) => {
    const input = join(dir, "input.img");
    writeFileSync(input, image);
    const args = ["tokenize", "--out", join(dir, "out"), ...configArgs(config, dir)];
    if (options.seed !== undefined) {
      args.push("--seed", String(options.seed));
    }
    if (options.projFile !== undefined) {
      args.push("--proj-file", options.projFile);
    }
    args.push(input);
    // Exit 1 means a per-image failure; the native error is in the manifest.
    const { exitCode } = runCli(args, [1]);
    if (exitCode === 1) {
      throw manifestError(join(dir, "out", "manifest.json"));
    }
    const parsed = parseTokenFile(readFileSync(join(dir, "out", "input.dftk")));
    return {
      dim: parsed.dim,
      nEntries: parsed.nEntries,
      nImageTokens: parsed.nImageTokens,
      nSeparators: parsed.nSeparators,
      tokens: parsed.tokens,
      entryTags: parsed.entries,
      layout: parsed.segments,
    };
  });
}
