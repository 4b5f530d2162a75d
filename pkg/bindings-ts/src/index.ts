export {
  SlsLogitsProcessor,
  MASK_FLOAT32,
  MASK_FLOAT64,
  DEFAULT_CONFIG,
  resolveConfig,
} from "./processor.js";
export type { ScoreVector, StepDiagnostics, SlsConfig } from "./processor.js";
export { jacobiEigh, orthonormalize } from "./linalg.js";
export {
  parseTrace,
  parseReplayReport,
  recordToScores,
} from "./trace.js";
export type { TraceHeader, TraceRecord, ReplayReport, ReplayStep } from "./trace.js";
