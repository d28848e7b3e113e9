import * as http from "node:http";

import { RunnerConfig } from "./config.js";
import { executeProgram } from "./runner.js";

interface ExecuteBody {
  language?: string;
  code: string;
  timeout_s?: number;
}

function parseExecuteBody(raw: string, config: RunnerConfig): ExecuteBody {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    throw new Error("body is not valid JSON");
  }
  if (typeof parsed !== "object" || parsed === null) {
    throw new Error("body must be a JSON object");
  }
  const body = parsed as Record<string, unknown>;
  if (typeof body.code !== "string" || body.code.length === 0) {
    throw new Error("'code' must be a non-empty string");
  }
  let timeoutS = config.defaultTimeoutS;
  if (body.timeout_s !== undefined) {
    if (typeof body.timeout_s !== "number" || !(body.timeout_s > 0)) {
      throw new Error("'timeout_s' must be a positive number");
    }
    timeoutS = Math.min(body.timeout_s, config.maxTimeoutS);
  }
  if (body.language !== undefined && body.language !== "python") {
    throw new Error(`unsupported language '${String(body.language)}'`);
  }
  return { language: "python", code: body.code, timeout_s: timeoutS };
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c: Buffer) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function createServer(config: RunnerConfig): http.Server {
  return http.createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/healthz") {
        res.writeHead(200, { "Content-Type": "text/plain" });
        res.end("ok");
        return;
      }
      if (req.method === "POST" && req.url === "/execute") {
        const raw = await readBody(req);
        let body: ExecuteBody;
        try {
          body = parseExecuteBody(raw, config);
        } catch (err) {
          res.writeHead(400, { "Content-Type": "text/plain" });
          res.end(`malformed request: ${(err as Error).message}`);
          return;
        }
        const verdict = await executeProgram(
          body.code, body.timeout_s as number, config);
        const payload = JSON.stringify(verdict);
        res.writeHead(200, { "Content-Type": "application/json" });
        res.end(payload);
        return;
      }
      res.writeHead(404, { "Content-Type": "text/plain" });
      res.end("not found");
    } catch (err) {
      res.writeHead(500, { "Content-Type": "text/plain" });
      res.end(`runner fault: ${String(err)}`);
    }
  });
}
