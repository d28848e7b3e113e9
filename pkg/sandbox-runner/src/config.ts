import * as os from "node:os";

export interface RunnerConfig {
  host: string;
  port: number;
  scratchRoot: string;
  interpreter: string[];
  maxOutputBytes: number;
  defaultTimeoutS: number;
  maxTimeoutS: number;
  memoryCapMb: number;
  cpuTimeCapS: number;
}

export const DEFAULTS: RunnerConfig = {
  host: "127.0.0.1",
  port: 8130,
  scratchRoot: os.tmpdir(),
  interpreter: ["python3"],
  maxOutputBytes: 64 * 1024,
  defaultTimeoutS: 30,
  maxTimeoutS: 600,
  memoryCapMb: 512,
  cpuTimeCapS: 0, // 0 = derive from the request timeout
};

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): RunnerConfig {
  const cfg: RunnerConfig = { ...DEFAULTS };
  if (env.RUNNER_HOST) cfg.host = env.RUNNER_HOST;
  if (env.RUNNER_PORT) cfg.port = parseInt(env.RUNNER_PORT, 10);
  if (env.RUNNER_SCRATCH_ROOT) cfg.scratchRoot = env.RUNNER_SCRATCH_ROOT;
  if (env.RUNNER_INTERPRETER) cfg.interpreter = env.RUNNER_INTERPRETER.split(" ");
  if (env.RUNNER_MEMORY_CAP_MB) cfg.memoryCapMb = parseInt(env.RUNNER_MEMORY_CAP_MB, 10);
  validate(cfg);
  return cfg;
}

export function validate(cfg: RunnerConfig): void {
  if (!cfg.scratchRoot) throw new Error("scratchRoot must be set");
  if (cfg.interpreter.length === 0) throw new Error("interpreter must be set");
  if (cfg.maxOutputBytes <= 0 || cfg.defaultTimeoutS <= 0 || cfg.maxTimeoutS <= 0) {
    throw new Error("output and timeout limits must be positive");
  }
  if (cfg.memoryCapMb <= 0) throw new Error("memoryCapMb must be positive");
  if (!Number.isFinite(cfg.port) || cfg.port < 0 || cfg.port > 65535) {
    throw new Error(`invalid port ${cfg.port}`);
  }
}
