import { describe, expect, it } from "vitest";

import {
  decodeClassifier,
  decodePack,
  encodeClassifier,
  encodePack,
  manifestDocument,
} from "../src/format.js";

describe("pack encoding", () => {
  it("lays out the 52-byte two-row example", () => {
    const buf = encodePack({
      featureDim: 2,
      numClasses: 2,
      perClassCount: 1,
      data: Float64Array.from([1, 0, 0, 1]),
    });
    expect(buf.length).toBe(52);
    expect(buf.toString("ascii", 0, 4)).toBe("NCAP");
    expect(buf.readUInt32LE(4)).toBe(1);
    expect([buf.readUInt32LE(8), buf.readUInt32LE(12), buf.readUInt32LE(16)]).toEqual([2, 2, 1]);
    expect(buf.readDoubleLE(20)).toBe(1);
    expect(buf.readDoubleLE(44)).toBe(1);
  });

  it("round-trips bit-exactly", () => {
    const data = Float64Array.from(
      { length: 3 * 2 * 4 },
      (_, i) => Math.sin(i * 12.9898) * 43758.5453,
    );
    const pack = { featureDim: 4, numClasses: 3, perClassCount: 2, data };
    const back = decodePack(encodePack(pack));
    expect(back.featureDim).toBe(4);
    expect(back.numClasses).toBe(3);
    expect(back.perClassCount).toBe(2);
    expect(Buffer.from(back.data.buffer)).toEqual(Buffer.from(data.buffer));
  });

  it("rejects non-finite values", () => {
    expect(() =>
      encodePack({
        featureDim: 1,
        numClasses: 2,
        perClassCount: 1,
        data: Float64Array.from([1, NaN]),
      }),
    ).toThrow(/non-finite/);
  });

  it("rejects bad magic and truncation", () => {
    const buf = encodePack({
      featureDim: 1,
      numClasses: 2,
      perClassCount: 1,
      data: Float64Array.from([1, 2]),
    });
    const bad = Buffer.from(buf);
    bad.write("XXXX", 0, "ascii");
    expect(() => decodePack(bad)).toThrow(/bad magic/);
    expect(() => decodePack(buf.subarray(0, buf.length - 4))).toThrow(/truncated/);
  });
});

describe("classifier encoding", () => {
  it("lays out the 80-byte C=2, p=3 example", () => {
    const buf = encodeClassifier({
      numClasses: 2,
      featureDim: 3,
      weights: Float64Array.from([1, 2, 3, 4, 5, 6]),
      biases: Float64Array.from([7, 8]),
    });
    expect(buf.length).toBe(16 + 48 + 16);
    expect(buf.toString("ascii", 0, 4)).toBe("NCLF");
    expect([buf.readUInt32LE(8), buf.readUInt32LE(12)]).toEqual([2, 3]);
  });

  it("round-trips", () => {
    const snapshot = {
      numClasses: 3,
      featureDim: 2,
      weights: Float64Array.from([0.5, -1, 2, 3.25, -0.125, 9]),
      biases: Float64Array.from([1, -2, 0.75]),
    };
    const back = decodeClassifier(encodeClassifier(snapshot));
    expect([...back.weights]).toEqual([...snapshot.weights]);
    expect([...back.biases]).toEqual([...snapshot.biases]);
  });
});

describe("manifest document", () => {
  it("emits the epochs/meta schema with optional fields", () => {
    const doc = JSON.parse(
      manifestDocument(
        [
          { epoch: 0, pack: "a.ncap" },
          { epoch: 2, pack: "b.ncap", classifier: "b.nclf", testPack: "t.ncap" },
        ],
        { dataset: "toy" },
      ),
    );
    expect(doc.epochs).toEqual([
      { epoch: 0, pack: "a.ncap" },
      { epoch: 2, pack: "b.ncap", classifier: "b.nclf", test_pack: "t.ncap" },
    ]);
    expect(doc.meta).toEqual({ dataset: "toy" });
  });
});
