/**
 * Binary encoders/decoders for the NCAP activation-pack and NCLF
 * classifier-snapshot formats, plus the JSON epoch manifest.
 *
 * NCAP: "NCAP" | u32 version=1 | u32 p | u32 C | u32 N |
 *       C*N*p float64 LE, row-major, rows grouped by ascending class.
 * NCLF: "NCLF" | u32 version=1 | u32 C | u32 p |
 *       C*p float64 LE (weights row-major) | C float64 LE (biases).
 *
 * All integers and floats are little-endian; there is no padding.
 */
import { writeFileSync } from "node:fs";

export const PACK_MAGIC = "NCAP";
export const CLASSIFIER_MAGIC = "NCLF";
export const FORMAT_VERSION = 1;

export interface ActivationPack {
  featureDim: number;
  numClasses: number;
  perClassCount: number;
  /** length C*N*p, class-major rows */
  data: Float64Array;
}

export interface ClassifierSnapshot {
  numClasses: number;
  featureDim: number;
  /** length C*p, row-major */
  weights: Float64Array;
  /** length C */
  biases: Float64Array;
}

function assertFinite(values: Float64Array, what: string): void {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new Error(`${what} contains a non-finite value at index ${i}`);
    }
  }
}

export function encodePack(pack: ActivationPack): Buffer {
  const { featureDim: p, numClasses: c, perClassCount: n, data } = pack;
  if (p < 1 || c < 2 || n < 1) {
    throw new Error(`invalid dimensions p=${p}, C=${c}, N=${n}`);
  }
  if (data.length !== c * n * p) {
    throw new Error(`data length ${data.length} != C*N*p = ${c * n * p}`);
  }
  assertFinite(data, "pack data");
  const buf = Buffer.alloc(20 + 8 * data.length);
  buf.write(PACK_MAGIC, 0, "ascii");
  buf.writeUInt32LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(p, 8);
  buf.writeUInt32LE(c, 12);
  buf.writeUInt32LE(n, 16);
  for (let i = 0; i < data.length; i++) {
    buf.writeDoubleLE(data[i], 20 + 8 * i);
  }
  return buf;
}

export function decodePack(buf: Buffer): ActivationPack {
  if (buf.length < 20) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 4) !== PACK_MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== FORMAT_VERSION) throw new Error(`unsupported version ${version}`);
  const p = buf.readUInt32LE(8);
  const c = buf.readUInt32LE(12);
  const n = buf.readUInt32LE(16);
  if (p < 1 || c < 2 || n < 1) throw new Error(`invalid dimensions p=${p}, C=${c}, N=${n}`);
  const count = c * n * p;
  if (buf.length !== 20 + 8 * count) {
    throw new Error(`truncated payload: expected ${20 + 8 * count} bytes, got ${buf.length}`);
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) data[i] = buf.readDoubleLE(20 + 8 * i);
  assertFinite(data, "pack payload");
  return { featureDim: p, numClasses: c, perClassCount: n, data };
}

export function encodeClassifier(snapshot: ClassifierSnapshot): Buffer {
  const { numClasses: c, featureDim: p, weights, biases } = snapshot;
  if (c < 2 || p < 1) throw new Error(`invalid dimensions C=${c}, p=${p}`);
  if (weights.length !== c * p || biases.length !== c) {
    throw new Error("weights/biases length mismatch");
  }
  assertFinite(weights, "weights");
  assertFinite(biases, "biases");
  const buf = Buffer.alloc(16 + 8 * (weights.length + biases.length));
  buf.write(CLASSIFIER_MAGIC, 0, "ascii");
  buf.writeUInt32LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(c, 8);
  buf.writeUInt32LE(p, 12);
  let offset = 16;
  for (let i = 0; i < weights.length; i++, offset += 8) buf.writeDoubleLE(weights[i], offset);
  for (let i = 0; i < biases.length; i++, offset += 8) buf.writeDoubleLE(biases[i], offset);
  return buf;
}

export function decodeClassifier(buf: Buffer): ClassifierSnapshot {
  if (buf.length < 16) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 4) !== CLASSIFIER_MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== FORMAT_VERSION) throw new Error(`unsupported version ${version}`);
  const c = buf.readUInt32LE(8);
  const p = buf.readUInt32LE(12);
  const expected = 16 + 8 * (c * p + c);
  if (buf.length !== expected) {
    throw new Error(`truncated payload: expected ${expected} bytes, got ${buf.length}`);
  }
  const weights = new Float64Array(c * p);
  const biases = new Float64Array(c);
  let offset = 16;
  for (let i = 0; i < weights.length; i++, offset += 8) weights[i] = buf.readDoubleLE(offset);
  for (let i = 0; i < biases.length; i++, offset += 8) biases[i] = buf.readDoubleLE(offset);
  return { numClasses: c, featureDim: p, weights, biases };
}

export interface ManifestEntry {
  epoch: number;
  pack: string;
  classifier?: string;
  testPack?: string;
}

export function manifestDocument(
  entries: ManifestEntry[],
  meta: Record<string, string>,
): string {
  const epochs = entries.map((e) => ({
    epoch: e.epoch,
    pack: e.pack,
    ...(e.classifier ? { classifier: e.classifier } : {}),
    ...(e.testPack ? { test_pack: e.testPack } : {}),
  }));
  return JSON.stringify({ epochs, meta }, null, 2) + "\n";
}

export function writeManifestFile(
  path: string,
  entries: ManifestEntry[],
  meta: Record<string, string> = {},
): void {
  writeFileSync(path, manifestDocument(entries, meta), "utf-8");
}
