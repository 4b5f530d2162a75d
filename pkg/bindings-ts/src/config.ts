/**
 * Pipeline configuration. Keys match the core harness config file format
 * (key=value text files and the config_echo section of its reports), so a
 * mapping parsed from either source can be passed straight through.
 */
export interface SlsConfig {
  k: number;
  window: number;
  rank: number;
  h_thres: number;
  alpha_max: number;
  gamma: number;
  s_h: number;
  s_d: number;
  h_0: number;
  d_0: number;
  epsilon: number;
  svd_tol: number;
}

export const DEFAULT_CONFIG: SlsConfig = {
  k: 512,
  window: 16,
  rank: 8,
  h_thres: 0.5,
  alpha_max: 1.5,
  gamma: 0.85,
  s_h: 0.5,
  s_d: 1.0,
  h_0: 0.0,
  d_0: 2.0,
  epsilon: 1e-12,
  svd_tol: 1e-10,
};

function fail(name: string, value: number, requirement: string): never {
  throw new RangeError(`config ${name}=${value} violates: ${requirement}`);
}

/** Merge a partial mapping over the defaults and validate every field. */
export function resolveConfig(overrides: Partial<SlsConfig> = {}): SlsConfig {
  for (const key of Object.keys(overrides)) {
    if (!(key in DEFAULT_CONFIG)) {
      throw new RangeError(`unknown config key '${key}'`);
    }
  }
  const config: SlsConfig = { ...DEFAULT_CONFIG, ...overrides };
  for (const name of ["k", "window", "rank"] as const) {
    const value = config[name];
    if (!Number.isInteger(value) || value < 1) fail(name, value, "positive integer");
  }
  if (!(Number.isFinite(config.h_thres) && config.h_thres >= 0)) {
    fail("h_thres", config.h_thres, "finite and >= 0");
  }
  if (!(Number.isFinite(config.alpha_max) && config.alpha_max > 1)) {
    fail("alpha_max", config.alpha_max, "> 1");
  }
  if (!(config.gamma > 0 && config.gamma <= 1)) fail("gamma", config.gamma, "in (0, 1]");
  for (const name of ["s_h", "s_d", "epsilon", "svd_tol"] as const) {
    const value = config[name];
    if (!(Number.isFinite(value) && value > 0)) fail(name, value, "finite and > 0");
  }
  for (const name of ["h_0", "d_0"] as const) {
    if (!Number.isFinite(config[name])) fail(name, config[name], "finite");
  }
  return config;
}
