/**
 * Logits processor for host inference stacks, following the common calling
 * convention: feed the full-vocabulary score vector of the current decode
 * step, get back the reshaped full-vocabulary scores to sample from.
 *
 * Per step it extracts the top-k scores, maintains a sliding buffer of the
 * last `window` rows, and, when the top-k softmax entropy exceeds the gate
 * threshold, rescales the current row against the dominant singular
 * directions of the centered buffer before writing it back.
 *
 * One processor owns exactly one decode stream; create one instance per
 * stream (or call reset() between generations).  Instances are not
 * thread-safe by contract.
 */

import { DEFAULT_CONFIG, resolveConfig, type SlsConfig } from "./config.js";
import { dot, jacobiEigh, orthonormalize } from "./linalg.js";

export type ScoreVector = Float64Array | Float32Array | number[];

export interface StepDiagnostics {
  step: number;
  entropy_pre: number;
  gap: number;
  gate_fired: boolean;
  alpha: number | null;
  m_eff: number | null;
  singular_values: number[] | null;
  entropy_post: number;
  /** Vocabulary ids of the retained top-k positions, extraction order. */
  indices: number[];
}

/** Mask for non-top-k positions: the most negative finite value of the
 * transit precision (literal -Infinity breaks several host stacks). */
export const MASK_FLOAT32 = -3.4028234663852886e38;
export const MASK_FLOAT64 = -Number.MAX_VALUE;

/**
 * Numerical-rank cutoff in eigenvalue space.  The Gram route computes
 * squared singular values, whose absolute error floor is ~eps * lambda_0;
 * thresholding at max(svd_tol^2, 1e-12) * lambda_0 discards exact null
 * directions (including the structural one introduced by centering) while
 * keeping every direction a thin SVD at svd_tol would keep, for any
 * spectrum without singular values in (svd_tol, 1e-6) relative.
 */
function rankTolerance(svdTol: number): number {
  return Math.max(svdTol * svdTol, 1e-12);
}

function sigmoid(x: number): number {
  if (x >= 0) return 1 / (1 + Math.exp(-x));
  const e = Math.exp(x);
  return e / (1 + e);
}

function softmaxEntropy(values: Float64Array, epsilon: number): number {
  let top = -Infinity;
  for (const v of values) if (v > top) top = v;
  let total = 0;
  const exps = new Float64Array(values.length);
  for (let i = 0; i < values.length; i++) {
    exps[i] = Math.exp(values[i] - top);
    total += exps[i];
  }
  let entropy = 0;
  for (let i = 0; i < values.length; i++) {
    const p = exps[i] / total;
    entropy -= p * Math.log(p + epsilon);
  }
  return entropy;
}

export class SlsLogitsProcessor {
  readonly vocabSize: number;
  readonly config: SlsConfig;
  private buffer: Float64Array[] = [];
  private stepCounter = 0;
  private last: StepDiagnostics | null = null;

  constructor(vocabSize: number, config: Partial<SlsConfig> = {}) {
    if (!Number.isInteger(vocabSize) || vocabSize < 1) {
      throw new RangeError(`vocabSize must be a positive integer, got ${vocabSize}`);
    }
    this.vocabSize = vocabSize;
    this.config = resolveConfig(config);
    if (this.config.k > vocabSize) {
      throw new RangeError(
        `config k=${this.config.k} exceeds vocabSize=${vocabSize}`,
      );
    }
  }

  /** Buffer emptied, step counter zeroed: next call behaves like step 0. */
  reset(): void {
    this.buffer = [];
    this.stepCounter = 0;
    this.last = null;
  }

  /** Telemetry of the most recent process() call as a plain object. */
  diagnostics(): StepDiagnostics | null {
    if (this.last === null) return null;
    return {
      ...this.last,
      singular_values: this.last.singular_values?.slice() ?? null,
      indices: this.last.indices.slice(),
    };
  }

  process(scores: ScoreVector): ScoreVector {
    if (scores.length !== this.vocabSize) {
      throw new RangeError(
        `scores length ${scores.length} does not match vocabSize ${this.vocabSize}`,
      );
    }
    const z = Float64Array.from(scores);
    for (let i = 0; i < z.length; i++) {
      if (!Number.isFinite(z[i])) {
        throw new RangeError(`score at position ${i} is not finite`);
      }
    }

    const { k, window } = this.config;
    const order = Array.from(z.keys()).sort((a, b) => z[b] - z[a] || a - b);
    const indices = order.slice(0, k);
    const values = Float64Array.from(indices, (i) => z[i]);

    this.buffer.push(Float64Array.from(values));
    if (this.buffer.length > window) this.buffer.shift();

    const entropyPre = softmaxEntropy(values, this.config.epsilon);
    const gap = k === 1 ? Infinity : values[0] - values[1];

    let adjusted = values;
    let entropyPost = entropyPre;
    let fired = false;
    let alpha: number | null = null;
    let mEff: number | null = null;
    let singular: number[] | null = null;

    if (entropyPre > this.config.h_thres && this.buffer.length >= 2) {
      const basis = this.spectralBasis();
      if (basis !== null) {
        alpha =
          1 +
          sigmoid(
            (entropyPre - this.config.h_0) / this.config.s_h -
              (this.config.d_0 - gap) / this.config.s_d,
          ) *
            (this.config.alpha_max - 1);
        const coefficients = basis.columns.map((column) => dot(column, values));
        const inSpan = new Float64Array(k);
        basis.columns.forEach((column, j) => {
          const c = coefficients[j];
          for (let t = 0; t < k; t++) inSpan[t] += c * column[t];
        });
        adjusted = new Float64Array(k);
        for (let t = 0; t < k; t++) {
          adjusted[t] =
            this.config.gamma * (values[t] - inSpan[t]) + alpha * inSpan[t];
        }
        this.buffer[this.buffer.length - 1] = Float64Array.from(adjusted);
        entropyPost = softmaxEntropy(adjusted, this.config.epsilon);
        fired = true;
        mEff = basis.columns.length;
        singular = basis.singularValues;
      }
    }

    this.last = {
      step: this.stepCounter,
      entropy_pre: entropyPre,
      gap,
      gate_fired: fired,
      alpha,
      m_eff: mEff,
      singular_values: singular,
      entropy_post: entropyPost,
      indices: indices.slice(),
    };
    this.stepCounter += 1;

    return this.scatter(adjusted, indices, scores);
  }

  private spectralBasis(): { columns: Float64Array[]; singularValues: number[] } | null {
    const rows = this.buffer;
    const tB = rows.length;
    const k = this.config.k;

    const mean = new Float64Array(k);
    for (const row of rows) for (let t = 0; t < k; t++) mean[t] += row[t];
    for (let t = 0; t < k; t++) mean[t] /= tB;
    const centered = rows.map((row) => {
      const out = new Float64Array(k);
      for (let t = 0; t < k; t++) out[t] = row[t] - mean[t];
      return out;
    });

    const gram: Float64Array[] = [];
    for (let i = 0; i < tB; i++) {
      gram.push(new Float64Array(tB));
    }
    for (let i = 0; i < tB; i++) {
      for (let j = i; j < tB; j++) {
        const g = dot(centered[i], centered[j]);
        gram[i][j] = g;
        gram[j][i] = g;
      }
    }

    const { values: lambda, vectors } = jacobiEigh(gram);
    const lambda0 = Math.max(lambda[0], 0);
    const sigma0 = Math.sqrt(lambda0);
    if (!(sigma0 >= this.config.svd_tol)) return null;

    const cutoff = rankTolerance(this.config.svd_tol) * lambda0;
    let numericalRank = 0;
    for (const value of lambda) {
      if (value >= cutoff) numericalRank += 1;
    }
    numericalRank = Math.min(numericalRank, tB - 1); // centering null space
    const mEff = Math.min(this.config.rank, tB, k, Math.max(numericalRank, 1));

    const columns: Float64Array[] = [];
    const singularValues: number[] = [];
    for (let j = 0; j < mEff; j++) {
      const sigma = Math.sqrt(Math.max(lambda[j], 0));
      const u = vectors[j];
      const column = new Float64Array(k);
      for (let i = 0; i < tB; i++) {
        const weight = u[i];
        if (weight === 0) continue;
        const row = centered[i];
        for (let t = 0; t < k; t++) column[t] += weight * row[t];
      }
      for (let t = 0; t < k; t++) column[t] /= sigma;
      columns.push(column);
      singularValues.push(sigma);
    }
    orthonormalize(columns);
    return { columns, singularValues };
  }

  private scatter(
    values: Float64Array,
    indices: number[],
    input: ScoreVector,
  ): ScoreVector {
    const useF32 = input instanceof Float32Array;
    const mask = useF32 ? MASK_FLOAT32 : MASK_FLOAT64;
    const full = new Float64Array(this.vocabSize).fill(mask);
    indices.forEach((index, i) => {
      full[index] = values[i];
    });
    if (useF32) return Float32Array.from(full);
    if (input instanceof Float64Array) return full;
    return Array.from(full);
  }
}

export { DEFAULT_CONFIG, resolveConfig };
export type { SlsConfig };
