/**
 * Training-loop exporter: taps a model's penultimate activations at chosen
 * epochs and writes NCAP packs, NCLF classifier snapshots, and the JSON
 * manifest that the analysis CLI consumes.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import {
  encodeClassifier,
  encodePack,
  ManifestEntry,
  writeManifestFile,
} from "./format.js";
import { CaptureTarget } from "./model.js";
import { deriveRng, Rng } from "./rng.js";

export type Sample = { input: Float64Array; label: number };

export interface ExportOptions {
  outputDir: string;
  /** epochs at which captureEpoch actually captures; others are skipped */
  epochsToCapture: number[];
  numClasses: number;
  /** per-class row cap; classes with more samples are subsampled */
  perClassCount: number;
  /** subsample seed; fixed seed makes repeated exports bit-identical */
  seed: number;
}

/** Reservoir that keeps a uniform fixed-size subsample in arrival order. */
class Reservoir {
  private items: { index: number; features: Float64Array }[] = [];
  private seen = 0;

  constructor(private capacity: number, private rng: Rng) {}

  add(features: Float64Array): void {
    if (this.items.length < this.capacity) {
      this.items.push({ index: this.seen, features });
    } else {
      const j = this.rng.nextInt(this.seen + 1);
      if (j < this.capacity) {
        this.items[j] = { index: this.seen, features };
      }
    }
    this.seen += 1;
  }

  get count(): number {
    return this.seen;
  }

  /** Selected rows sorted back into stream order. */
  drain(): Float64Array[] {
    return this.items
      .slice()
      .sort((a, b) => a.index - b.index)
      .map((item) => item.features);
  }
}

export class ExportSession {
  readonly options: ExportOptions;
  private readonly wanted: Set<number>;
  private readonly entries = new Map<number, ManifestEntry>();
  private featureDim: number | null = null;

  constructor(options: ExportOptions) {
    if (options.numClasses < 2) throw new Error("numClasses must be >= 2");
    if (options.perClassCount < 1) throw new Error("perClassCount must be >= 1");
    this.options = options;
    this.wanted = new Set(options.epochsToCapture);
    mkdirSync(options.outputDir, { recursive: true });
  }

  /**
   * Capture one epoch. Returns the manifest entry, or null when the epoch
   * is not in the capture set. The model must be in evaluation mode (no
   * parameter updates happen here).
   */
  captureEpoch(
    epoch: number,
    model: CaptureTarget,
    data: Iterable<Sample>,
  ): ManifestEntry | null {
    if (!this.wanted.has(epoch)) return null;
    if (this.entries.has(epoch)) {
      throw new Error(`duplicate epoch ${epoch}: already captured`);
    }
    const { numClasses: c, perClassCount: n, seed } = this.options;
    const rng = deriveRng(seed, epoch);
    const reservoirs = Array.from({ length: c }, () => new Reservoir(n, rng));

    for (const { input, label } of data) {
      if (!Number.isInteger(label) || label < 0 || label >= c) {
        throw new Error(`label out of range: ${label} with ${c} classes`);
      }
      const features = Float64Array.from(model.penultimate(input));
      if (this.featureDim === null) {
        this.featureDim = features.length;
      } else if (features.length !== this.featureDim) {
        throw new Error(
          `dimension drift: epoch ${epoch} features have ${features.length} ` +
            `dims, previous epochs had ${this.featureDim}`,
        );
      }
      reservoirs[label].add(features);
    }

    const p = this.featureDim;
    if (p === null) throw new Error("no samples supplied");
    for (let cls = 0; cls < c; cls++) {
      if (reservoirs[cls].count < n) {
        throw new Error(
          `class ${cls} has ${reservoirs[cls].count} samples, need ${n}`,
        );
      }
    }

    const rows = new Float64Array(c * n * p);
    let offset = 0;
    for (let cls = 0; cls < c; cls++) {
      for (const features of reservoirs[cls].drain()) {
        rows.set(features, offset);
        offset += p;
      }
    }
    const head = model.classifierHead();
    if (head.weights.length !== c * p || head.biases.length !== c) {
      throw new Error(
        `classifier head shape (${head.weights.length / p} x ${p}) does not ` +
          `match ${c} classes`,
      );
    }

    const packName = `epoch_${String(epoch).padStart(3, "0")}.ncap`;
    const clfName = `epoch_${String(epoch).padStart(3, "0")}.nclf`;
    writeFileSync(
      join(this.options.outputDir, packName),
      encodePack({ featureDim: p, numClasses: c, perClassCount: n, data: rows }),
    );
    writeFileSync(
      join(this.options.outputDir, clfName),
      encodeClassifier({
        numClasses: c,
        featureDim: p,
        weights: head.weights,
        biases: head.biases,
      }),
    );
    const entry: ManifestEntry = { epoch, pack: packName, classifier: clfName };
    this.entries.set(epoch, entry);
    return entry;
  }

  capturedEntries(): ManifestEntry[] {
    return [...this.entries.values()].sort((a, b) => a.epoch - b.epoch);
  }

  /** Write the manifest for everything captured so far; returns its path. */
  writeManifest(meta: Record<string, string> = {}): string {
    const path = join(this.options.outputDir, "manifest.json");
    writeManifestFile(path, this.capturedEntries(), meta);
    return path;
  }
}
