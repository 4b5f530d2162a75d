import { describe, expect, it } from "vitest";

import {
  DEFAULT_CONFIG,
  MASK_FLOAT32,
  MASK_FLOAT64,
  SlsLogitsProcessor,
  jacobiEigh,
  resolveConfig,
} from "../src/index.js";

function lowEntropyScores(vocab: number, seed = 1): Float64Array {
  const scores = new Float64Array(vocab);
  for (let i = 0; i < vocab; i++) scores[i] = Math.sin(seed * 31 + i * 2.39) * 0.5;
  scores[3] += 14; // dominant logit keeps entropy under any sensible gate
  return scores;
}

function noisyScores(vocab: number, seed = 1): Float64Array {
  const scores = new Float64Array(vocab);
  for (let i = 0; i < vocab; i++) scores[i] = Math.sin(seed * 127.3 + i * 1.71) * 0.05;
  return scores;
}

describe("resolveConfig", () => {
  it("applies defaults", () => {
    expect(resolveConfig({})).toEqual(DEFAULT_CONFIG);
  });

  it("rejects out-of-range values", () => {
    expect(() => resolveConfig({ gamma: 1.5 })).toThrow(/gamma/);
    expect(() => resolveConfig({ alpha_max: 1.0 })).toThrow(/alpha_max/);
    expect(() => resolveConfig({ k: 0 })).toThrow(/k=0/);
  });

  it("rejects unknown keys", () => {
    expect(() => resolveConfig({ knob: 3 } as never)).toThrow(/unknown config key/);
  });
});

describe("jacobiEigh", () => {
  it("diagonalizes a known symmetric matrix", () => {
    const { values, vectors } = jacobiEigh([
      Float64Array.from([2, 1]),
      Float64Array.from([1, 2]),
    ]);
    expect(values[0]).toBeCloseTo(3, 12);
    expect(values[1]).toBeCloseTo(1, 12);
    // eigenvector of lambda=3 is (1,1)/sqrt(2) up to sign
    expect(Math.abs(vectors[0][0])).toBeCloseTo(Math.SQRT1_2, 12);
    expect(vectors[0][0] * vectors[0][1]).toBeGreaterThan(0);
  });

  it("reconstructs a random symmetric matrix", () => {
    const n = 9;
    const a: Float64Array[] = [];
    for (let i = 0; i < n; i++) a.push(new Float64Array(n));
    for (let i = 0; i < n; i++) {
      for (let j = i; j < n; j++) {
        const x = Math.sin(i * 7.1 + j * 3.7);
        a[i][j] = x;
        a[j][i] = x;
      }
    }
    const { values, vectors } = jacobiEigh(a);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        let rebuilt = 0;
        for (let t = 0; t < n; t++) rebuilt += values[t] * vectors[t][i] * vectors[t][j];
        expect(rebuilt).toBeCloseTo(a[i][j], 10);
      }
    }
  });
});

describe("SlsLogitsProcessor", () => {
  const vocab = 24;
  const config = { k: 16, window: 8 };

  it("rejects k above the vocabulary size", () => {
    expect(() => new SlsLogitsProcessor(8, { k: 16 })).toThrow(/vocabSize/);
  });

  it("passes low-entropy scores through and masks the rest", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    const scores = lowEntropyScores(vocab);
    const out = processor.process(scores) as Float64Array;
    const diag = processor.diagnostics()!;
    expect(diag.gate_fired).toBe(false);
    expect(diag.entropy_post).toBe(diag.entropy_pre);
    for (const index of diag.indices) {
      expect(out[index]).toBe(scores[index]);
    }
    const retained = new Set(diag.indices);
    for (let i = 0; i < vocab; i++) {
      if (!retained.has(i)) expect(out[i]).toBe(MASK_FLOAT64);
    }
  });

  it("fires the gate on noisy scores once the buffer has history", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    processor.process(noisyScores(vocab, 1));
    expect(processor.diagnostics()!.gate_fired).toBe(false); // single row
    processor.process(noisyScores(vocab, 2));
    const diag = processor.diagnostics()!;
    expect(diag.gate_fired).toBe(true);
    expect(diag.alpha).not.toBeNull();
    expect(diag.alpha!).toBeGreaterThan(1);
    expect(diag.alpha!).toBeLessThan(DEFAULT_CONFIG.alpha_max);
    expect(diag.m_eff).toBe(1);
    expect(diag.singular_values!.length).toBe(1);
    // per-step entropy movement is not a contract; recomputation is
    expect(Number.isFinite(diag.entropy_post)).toBe(true);
    expect(diag.entropy_post).not.toBe(diag.entropy_pre);
  });

  it("carries adjusted values on the original indices", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    processor.process(noisyScores(vocab, 5));
    const scores = noisyScores(vocab, 6);
    const out = processor.process(scores) as Float64Array;
    const diag = processor.diagnostics()!;
    expect(diag.gate_fired).toBe(true);
    const retained = new Set(diag.indices);
    for (let i = 0; i < vocab; i++) {
      if (!retained.has(i)) expect(out[i]).toBe(MASK_FLOAT64);
    }
    // at least one retained value actually moved
    const moved = diag.indices.some((index) => out[index] !== scores[index]);
    expect(moved).toBe(true);
  });

  it("throws on wrong-length input and leaves state untouched", () => {
    const reference = new SlsLogitsProcessor(vocab, config);
    const processor = new SlsLogitsProcessor(vocab, config);
    processor.process(noisyScores(vocab, 7));
    reference.process(noisyScores(vocab, 7));
    expect(() => processor.process(new Float64Array(vocab + 1))).toThrow(
      new RegExp(`${vocab + 1}.*${vocab}`),
    );
    const a = processor.process(noisyScores(vocab, 8)) as Float64Array;
    const b = reference.process(noisyScores(vocab, 8)) as Float64Array;
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("rejects non-finite scores", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    const scores = noisyScores(vocab);
    scores[5] = Number.NaN;
    expect(() => processor.process(scores)).toThrow(/finite/);
  });

  it("reset clears gate history and restarts the step counter", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    for (let s = 0; s < 5; s++) processor.process(noisyScores(vocab, s));
    processor.reset();
    expect(processor.diagnostics()).toBeNull();
    const fresh = new SlsLogitsProcessor(vocab, config);
    const a = processor.process(noisyScores(vocab, 42)) as Float64Array;
    const b = fresh.process(noisyScores(vocab, 42)) as Float64Array;
    expect(Array.from(a)).toEqual(Array.from(b));
    expect(processor.diagnostics()!.step).toBe(0);
    expect(processor.diagnostics()!.gate_fired).toBe(false);
  });

  it("double reset is idempotent", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    processor.process(noisyScores(vocab));
    processor.reset();
    processor.reset();
    expect(processor.diagnostics()).toBeNull();
  });

  it("interleaved processors match independent sequential runs", () => {
    const first = new SlsLogitsProcessor(vocab, config);
    const second = new SlsLogitsProcessor(vocab, config);
    const interleavedFirst: number[][] = [];
    const interleavedSecond: number[][] = [];
    for (let s = 0; s < 6; s++) {
      interleavedFirst.push(Array.from(first.process(noisyScores(vocab, s)) as Float64Array));
      interleavedSecond.push(
        Array.from(second.process(noisyScores(vocab, 100 + s)) as Float64Array),
      );
    }
    const sequential = new SlsLogitsProcessor(vocab, config);
    for (let s = 0; s < 6; s++) {
      expect(Array.from(sequential.process(noisyScores(vocab, s)) as Float64Array)).toEqual(
        interleavedFirst[s],
      );
    }
    const sequentialSecond = new SlsLogitsProcessor(vocab, config);
    for (let s = 0; s < 6; s++) {
      expect(
        Array.from(sequentialSecond.process(noisyScores(vocab, 100 + s)) as Float64Array),
      ).toEqual(interleavedSecond[s]);
    }
  });

  it("honors the caller's array convention", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    const f32 = processor.process(Float32Array.from(lowEntropyScores(vocab)));
    expect(f32).toBeInstanceOf(Float32Array);
    expect(Math.min(...Array.from(f32 as Float32Array))).toBe(Math.fround(MASK_FLOAT32));

    processor.reset();
    const plain = processor.process(Array.from(lowEntropyScores(vocab)));
    expect(Array.isArray(plain)).toBe(true);
  });

  it("diagnostics returns an independent copy", () => {
    const processor = new SlsLogitsProcessor(vocab, config);
    processor.process(noisyScores(vocab, 1));
    processor.process(noisyScores(vocab, 2));
    const diag = processor.diagnostics()!;
    diag.indices[0] = -99;
    diag.singular_values![0] = -99;
    const again = processor.diagnostics()!;
    expect(again.indices[0]).not.toBe(-99);
    expect(again.singular_values![0]).not.toBe(-99);
  });
});
