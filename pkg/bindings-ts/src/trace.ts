/**
 * Readers for the core harness's line-delimited JSON artifacts: logit trace
 * files (`.slstrace.jsonl`) and replay reports.  Trace values are stored at
 * 32-bit precision as shortest round-trip decimals; loading rounds each
 * parsed number through float32 (Math.fround) and keeps the widened float64,
 * matching the core's load semantics bit for bit.
 */

export interface TraceHeader {
  format_version: number;
  vocab_size: number;
  k: number;
  source_label: string;
  seed: number;
}

export interface TraceRecord {
  step: number;
  indices: number[];
  values: Float64Array;
  chosen_token: number | null;
}

export interface ReplayStep {
  step: number;
  entropy_pre: number;
  gap: number | null;
  gate_fired: boolean;
  alpha: number | null;
  m_eff: number | null;
  singular_values: number[] | null;
  entropy_post: number;
  token: number;
  values_post?: number[];
}

export interface ReplayReport {
  meta: {
    report_version: number;
    kind: string;
    method: string;
    sampler: string;
    trace: { vocab_size: number; k: number; seed: number };
    config_echo: Record<string, unknown>;
    summary: Record<string, unknown>;
  };
  steps: ReplayStep[];
}

function splitLines(text: string): string[] {
  return text.split("\n").filter((line) => line.length > 0);
}

export function parseTrace(text: string): { header: TraceHeader; records: TraceRecord[] } {
  const lines = splitLines(text);
  if (lines.length === 0) throw new Error("empty trace");
  const header = JSON.parse(lines[0]) as TraceHeader;
  if (header.format_version !== 1) {
    throw new Error(`unsupported trace format_version ${header.format_version}`);
  }
  const records = lines.slice(1).map((line) => {
    const raw = JSON.parse(line) as {
      step: number;
      indices: number[];
      values: number[];
      chosen_token: number | null;
    };
    return {
      step: raw.step,
      indices: raw.indices,
      values: Float64Array.from(raw.values, Math.fround),
      chosen_token: raw.chosen_token,
    };
  });
  return { header, records };
}

export function parseReplayReport(text: string): ReplayReport {
  const lines = splitLines(text);
  if (lines.length < 2) throw new Error("report too short");
  const meta = JSON.parse(lines[0]) as ReplayReport["meta"];
  if (meta.kind !== "replay") throw new Error(`expected a replay report, got '${meta.kind}'`);
  const steps: ReplayStep[] = [];
  for (const line of lines.slice(1)) {
    const obj = JSON.parse(line) as Record<string, unknown>;
    if ("timing" in obj) continue; // trailing timing section
    steps.push(obj as unknown as ReplayStep);
  }
  return { meta, steps };
}

/** Spread a trace record back over the full vocabulary (k == vocab_size
 * traces only, where every position is covered). */
export function recordToScores(record: TraceRecord, vocabSize: number): Float64Array {
  if (record.indices.length !== vocabSize) {
    throw new Error(
      `record covers ${record.indices.length} of ${vocabSize} positions; full coverage required`,
    );
  }
  const scores = new Float64Array(vocabSize);
  record.indices.forEach((index, i) => {
    scores[index] = record.values[i];
  });
  return scores;
}
