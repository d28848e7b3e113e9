import { spawn } from "node:child_process";
import { mkdtemp, rm, writeFile } from "node:fs/promises";
import * as path from "node:path";

import { RunnerConfig } from "./config.js";

export type VerdictStatus = "pass" | "fail" | "timeout" | "error";

export interface Verdict {
  status: VerdictStatus;
  exit_code: number | null;
  stdout: string;
  stderr: string;
  duration_ms: number;
}

function truncatingCollector(limit: number): {
  push: (chunk: Buffer) => void;
  text: () => string;
} {
  const chunks: Buffer[] = [];
  let size = 0;
  return {
    push(chunk: Buffer) {
      if (size >= limit) return;
      const room = limit - size;
      const taken = chunk.length > room ? chunk.subarray(0, room) : chunk;
      chunks.push(taken);
      size += taken.length;
    },
    text() {
      return Buffer.concat(chunks).toString("utf-8");
    },
  };
}

/**
 * Runs one program in a fresh scratch directory under a wall-clock deadline.
 * The scratch directory is always removed, even on runner faults.
 */
export async function executeProgram(
  code: string,
  timeoutS: number,
  config: RunnerConfig,
): Promise<Verdict> {
  const start = Date.now();
  let scratch: string | null = null;
  try {
    scratch = await mkdtemp(path.join(config.scratchRoot, "run-"));
    const programPath = path.join(scratch, "program.py");
    await writeFile(programPath, code, "utf-8");

    const cpuCap = config.cpuTimeCapS > 0
      ? config.cpuTimeCapS
      : Math.ceil(timeoutS) + 5;
    // rlimits apply to the exec'd interpreter because exec keeps the pid
    const shellLine =
      `ulimit -v ${config.memoryCapMb * 1024} -t ${cpuCap} 2>/dev/null; ` +
      `exec ${config.interpreter.map(shellQuote).join(" ")} program.py`;

    const verdict = await new Promise<Verdict>((resolve) => {
      const child = spawn("/bin/sh", ["-c", shellLine], {
        cwd: scratch as string,
        stdio: ["ignore", "pipe", "pipe"],
      });
      const stdout = truncatingCollector(config.maxOutputBytes);
      const stderr = truncatingCollector(config.maxOutputBytes);
      child.stdout.on("data", (c: Buffer) => stdout.push(c));
      child.stderr.on("data", (c: Buffer) => stderr.push(c));

      let timedOut = false;
      const deadline = setTimeout(() => {
        timedOut = true;
        child.kill("SIGKILL");
      }, timeoutS * 1000);

      child.on("error", (err: Error) => {
        clearTimeout(deadline);
        resolve({
          status: "error",
          exit_code: null,
          stdout: stdout.text(),
          stderr: String(err),
          duration_ms: Date.now() - start,
        });
      });
      child.on("close", (exitCode: number | null) => {
        clearTimeout(deadline);
        if (timedOut) {
          resolve({
            status: "timeout",
            exit_code: null,
            stdout: stdout.text(),
            stderr: stderr.text(),
            duration_ms: Date.now() - start,
          });
        } else {
          resolve({
            status: exitCode === 0 ? "pass" : "fail",
            exit_code: exitCode,
            stdout: stdout.text(),
            stderr: stderr.text(),
            duration_ms: Date.now() - start,
          });
        }
      });
    });
    return verdict;
  } catch (err) {
    return {
      status: "error",
      exit_code: null,
      stdout: "",
      stderr: String(err),
      duration_ms: Date.now() - start,
    };
  } finally {
    if (scratch !== null) {
      await rm(scratch, { recursive: true, force: true }).catch(() => {});
    }
  }
}

function shellQuote(word: string): string {
  return "'" + word.replace(/'/g, "'\\''") + "'";
}
