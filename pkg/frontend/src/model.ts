/**
 * A small two-layer classifier (linear -> relu -> linear) with feature
 * hooks on the input of the final linear layer, mirroring how a real
 * training loop taps penultimate activations.
 */
import { Rng } from "./rng.js";

export type FeatureHook = (features: Float64Array) => void;

export interface ClassifierHead {
  /** row-major (C, featureDim) */
  weights: Float64Array;
  biases: Float64Array;
}

export interface CaptureTarget {
  penultimate(input: Float64Array): Float64Array;
  classifierHead(): ClassifierHead;
}

export class TwoLayerNet implements CaptureTarget {
  readonly inputDim: number;
  readonly hiddenDim: number;
  readonly numClasses: number;
  w1: Float64Array; // (hidden, input) row-major
  b1: Float64Array;
  w2: Float64Array; // (classes, hidden) row-major
  b2: Float64Array;
  private hooks: FeatureHook[] = [];

  constructor(inputDim: number, hiddenDim: number, numClasses: number, rng: Rng) {
    this.inputDim = inputDim;
    this.hiddenDim = hiddenDim;
    this.numClasses = numClasses;
    const scale1 = 1.0 / Math.sqrt(inputDim);
    const scale2 = 1.0 / Math.sqrt(hiddenDim);
    this.w1 = new Float64Array(hiddenDim * inputDim).map(() => rng.nextGaussian() * scale1);
    this.b1 = new Float64Array(hiddenDim);
    this.w2 = new Float64Array(numClasses * hiddenDim).map(() => rng.nextGaussian() * scale2);
    this.b2 = new Float64Array(numClasses);
  }

  /** Register a hook fired with the final-layer input on every forward pass. */
  registerFeatureHook(hook: FeatureHook): () => void {
    this.hooks.push(hook);
    return () => {
      this.hooks = this.hooks.filter((h) => h !== hook);
    };
  }

  private hidden(input: Float64Array): Float64Array {
    if (input.length !== this.inputDim) {
      throw new Error(`input has ${input.length} features, expected ${this.inputDim}`);
    }
    const h = new Float64Array(this.hiddenDim);
    for (let j = 0; j < this.hiddenDim; j++) {
      let acc = this.b1[j];
      const row = j * this.inputDim;
      for (let i = 0; i < this.inputDim; i++) acc += this.w1[row + i] * input[i];
      h[j] = acc > 0 ? acc : 0; // relu
    }
    return h;
  }

  forward(input: Float64Array): Float64Array {
    const features = this.hidden(input);
    for (const hook of this.hooks) hook(features);
    const logits = new Float64Array(this.numClasses);
    for (let c = 0; c < this.numClasses; c++) {
      let acc = this.b2[c];
      const row = c * this.hiddenDim;
      for (let j = 0; j < this.hiddenDim; j++) acc += this.w2[row + j] * features[j];
      logits[c] = acc;
    }
    return logits;
  }

  penultimate(input: Float64Array): Float64Array {
    let captured: Float64Array | null = null;
    const remove = this.registerFeatureHook((f) => {
      captured = f;
    });
    try {
      this.forward(input);
    } finally {
      remove();
    }
    if (captured === null) throw new Error("feature hook did not fire");
    return captured;
  }

  classifierHead(): ClassifierHead {
    return { weights: this.w2.slice(), biases: this.b2.slice() };
  }

  /** One SGD step on softmax cross-entropy over a batch. */
  trainStep(inputs: Float64Array[], labels: number[], lr: number): number {
    let loss = 0;
    const gw2 = new Float64Array(this.w2.length);
    const gb2 = new Float64Array(this.b2.length);
    const gw1 = new Float64Array(this.w1.length);
    const gb1 = new Float64Array(this.b1.length);
    for (let s = 0; s < inputs.length; s++) {
      const x = inputs[s];
      const h = this.hidden(x);
      const logits = new Float64Array(this.numClasses);
      for (let c = 0; c < this.numClasses; c++) {
        let acc = this.b2[c];
        const row = c * this.hiddenDim;
        for (let j = 0; j < this.hiddenDim; j++) acc += this.w2[row + j] * h[j];
        logits[c] = acc;
      }
      const maxLogit = Math.max(...logits);
      let z = 0;
      for (let c = 0; c < this.numClasses; c++) z += Math.exp(logits[c] - maxLogit);
      loss += Math.log(z) + maxLogit - logits[labels[s]];
      const dh = new Float64Array(this.hiddenDim);
      for (let c = 0; c < this.numClasses; c++) {
        const prob = Math.exp(logits[c] - maxLogit) / z;
        const grad = prob - (c === labels[s] ? 1 : 0);
        gb2[c] += grad;
        const row = c * this.hiddenDim;
        for (let j = 0; j < this.hiddenDim; j++) {
          gw2[row + j] += grad * h[j];
          dh[j] += grad * this.w2[row + j];
        }
      }
      for (let j = 0; j < this.hiddenDim; j++) {
        if (h[j] <= 0) continue; // relu gate
        gb1[j] += dh[j];
        const row = j * this.inputDim;
        for (let i = 0; i < this.inputDim; i++) gw1[row + i] += dh[j] * x[i];
      }
    }
    const scale = lr / inputs.length;
    for (let i = 0; i < this.w2.length; i++) this.w2[i] -= scale * gw2[i];
    for (let i = 0; i < this.b2.length; i++) this.b2[i] -= scale * gb2[i];
    for (let i = 0; i < this.w1.length; i++) this.w1[i] -= scale * gw1[i];
    for (let i = 0; i < this.b1.length; i++) this.b1[i] -= scale * gb1[i];
    return loss / inputs.length;
  }
}
