/**
 * Binary formats shared with the native pipeline.
 *
 * Token file ("DFTK"): magic, u32 version, u32 dim, u32 nEntries,
 * u32 nImageTokens, u32 nSeparators, then one 6-byte record per entry
 * (u8 tag, u8 kind, u16 cropIndex, u8 gridRow, u8 gridCol), then every
 * entry's vector as float32, all little-endian.
 *
 * Raw image fixture ("DFIM"): magic, u32 width, u32 height, then
 * width * height * 3 bytes of interleaved RGB.
 */

export type SegmentKind = "low" | "medium" | "high";

export interface SegmentInfo {
  kind: SegmentKind;
  cropIndex: number;
  tokenCount: number;
}

export type EntryTag =
  | { tag: "image"; kind: SegmentKind; cropIndex: number; gridRow: number; gridCol: number }
  | { tag: "separator" };

export interface TokenFile {
  version: number;
  dim: number;
  nEntries: number;
  nImageTokens: number;
  nSeparators: number;
  entries: EntryTag[];
  segments: SegmentInfo[];
  /** Row-major (nEntries x dim) vectors, separators included. */
  tokens: Float32Array;
}

const TOKEN_MAGIC = 0x4b544644; // "DFTK" little-endian
const FIXTURE_MAGIC = 0x4d494644; // "DFIM" little-endian
const KIND_NAMES: SegmentKind[] = ["low", "medium", "high"];

export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

export function parseTokenFile(data: Uint8Array): TokenFile {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (data.byteLength < 24 || view.getUint32(0, true) !== TOKEN_MAGIC) {
    throw new FormatError("not a DFTK token file");
  }
  const version = view.getUint32(4, true);
  if (version !== 1) {
    throw new FormatError(`unsupported token file version ${version}`);
  }
  const dim = view.getUint32(8, true);
  const nEntries = view.getUint32(12, true);
  const nImageTokens = view.getUint32(16, true);
  const nSeparators = view.getUint32(20, true);
  if (nImageTokens + nSeparators !== nEntries) {
    throw new FormatError("header counts are inconsistent");
  }
  const expected = 24 + 6 * nEntries + 4 * nEntries * dim;
  if (data.byteLength !== expected) {
    throw new FormatError(`token file is ${data.byteLength} bytes, expected ${expected}`);
  }

  const entries: EntryTag[] = [];
  const segments: SegmentInfo[] = [];
  let offset = 24;
  let seenImages = 0;
  for (let i = 0; i < nEntries; i++) {
    const tag = view.getUint8(offset);
    const kindCode = view.getUint8(offset + 1);
    const cropIndex = view.getUint16(offset + 2, true);
    const gridRow = view.getUint8(offset + 4);
    const gridCol = view.getUint8(offset + 5);
    offset += 6;
    if (tag === 1) {
      entries.push({ tag: "separator" });
      continue;
    }
    if (tag !== 0) {
      throw new FormatError(`unknown entry tag ${tag}`);
    }
    const kind = KIND_NAMES[kindCode];
    if (kind === undefined) {
      throw new FormatError(`unknown segment kind ${kindCode}`);
    }
    const last = segments[segments.length - 1];
    if (!last || last.kind !== kind || last.cropIndex !== cropIndex) {
      segments.push({ kind, cropIndex, tokenCount: 0 });
    }
    segments[segments.length - 1].tokenCount += 1;
    entries.push({ tag: "image", kind, cropIndex, gridRow, gridCol });
    seenImages += 1;
  }
  if (seenImages !== nImageTokens) {
    throw new FormatError(`found ${seenImages} image tokens, header says ${nImageTokens}`);
  }

  const tokens = new Float32Array(nEntries * dim);
  for (let i = 0; i < tokens.length; i++) {
    tokens[i] = view.getFloat32(offset + 4 * i, true);
  }
  return { version, dim, nEntries, nImageTokens, nSeparators, entries, segments, tokens };
}

/** Serialize interleaved RGB pixels into the raw DFIM fixture format. */
export function encodeFixture(width: number, height: number, rgb: Uint8Array): Uint8Array {
  if (rgb.length !== width * height * 3) {
    throw new FormatError(`pixel buffer is ${rgb.length} bytes, expected ${width * height * 3}`);
  }
  const out = new Uint8Array(12 + rgb.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, FIXTURE_MAGIC, true);
  view.setUint32(4, width, true);
  view.setUint32(8, height, true);
  out.set(rgb, 12);
  return out;
}
