"""HTTP client for the code-execution sandbox.

Wire protocol: POST {base_url}/execute with {"language", "code",
"timeout_s"}; the service answers 200 with {"status", "exit_code",
"stdout", "stderr", "duration_ms"} for every verdict, and 5xx only for
service faults. The client is shareable across threads; execute_parallel
owns a bounded worker pool and keeps results order-aligned.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

STATUSES = ("pass", "fail", "timeout", "error")
TAIL_BYTES = 4096


class SandboxTransportError(RuntimeError):
    """The sandbox service itself was unreachable or faulted."""


@dataclass
class ExecutionRequest:
    candidate_id: str
    program: str
    timeout_s: float = 30.0
    snippet_language: str = "python"

    def __post_init__(self) -> None:
        if not self.program:
            raise ValueError("program must be non-empty")
        if not 0 < self.timeout_s <= 600:
            raise ValueError(f"timeout_s out of range: {self.timeout_s}")


@dataclass
class ExecutionVerdict:
    candidate_id: str
    status: str
    exit_code: int | None
    stdout_tail: str
    stderr_tail: str
    duration_ms: int

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"invalid status {self.status!r}")


def _tail(text: str) -> str:
    return text[-TAIL_BYTES:] if len(text) > TAIL_BYTES else text


class SandboxClient:
    def __init__(self, base_url: str, session: requests.Session | None = None,
                 request_timeout_grace_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.grace_s = request_timeout_grace_s

    def healthy(self) -> bool:
        try:
            resp = self.session.get(f"{self.base_url}/healthz", timeout=5)
            return resp.status_code == 200
        except requests.RequestException:
            return False

    def execute(self, req: ExecutionRequest) -> ExecutionVerdict:
        try:
            resp = self.session.post(
                f"{self.base_url}/execute",
                json={"language": req.snippet_language, "code": req.program,
                      "timeout_s": req.timeout_s},
                timeout=req.timeout_s + self.grace_s)
        except requests.RequestException as exc:
            raise SandboxTransportError(str(exc)) from exc
        if resp.status_code != 200:
            raise SandboxTransportError(
                f"sandbox returned HTTP {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        return ExecutionVerdict(
            candidate_id=req.candidate_id,
            status=body["status"],
            exit_code=body.get("exit_code"),
            stdout_tail=_tail(body.get("stdout", "")),
            stderr_tail=_tail(body.get("stderr", "")),
            duration_ms=int(body.get("duration_ms", 0)))

    def execute_parallel(self, reqs: list[ExecutionRequest],
                         max_parallel: int = 8) -> list[ExecutionVerdict]:
        """Order-aligned verdicts; one request's failure never poisons
        another (transport errors become status=error verdicts)."""
        if not reqs:
            return []

        def run(req: ExecutionRequest) -> ExecutionVerdict:
            try:
                return self.execute(req)
            except SandboxTransportError as exc:
                return ExecutionVerdict(
                    candidate_id=req.candidate_id, status="error",
                    exit_code=None, stdout_tail="",
                    stderr_tail=f"transport: {exc}", duration_ms=0)

        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            return list(pool.map(run, reqs))
