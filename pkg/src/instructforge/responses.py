"""Response sampling and (response, tests) parsing.

For each instruction the model samples n outputs shaped as a [Response]
section followed by a [Tests] section, each carrying fenced code. Samples
missing either part are dropped with a reason; survivors become executable
candidates whose program is response code plus tests.
"""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field

from .gateway import InferenceGateway
from .prompts import PromptPool, build_response_prompt
from .records import InstructionRecord, ResponseCandidate

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES_PER_INSTRUCTION = 10

_FENCE_RE = re.compile(r"```(?:[\w+-]*)\n(.*?)```", re.S)
_RESPONSE_TAG = "[Response]"
_TESTS_TAG = "[Tests]"


class ResponseParseError(ValueError):
    def __init__(self, missing: str):
        super().__init__(f"missing {missing}")
        self.missing = missing


def _section_split(raw: str) -> tuple[str, str]:
    """Split raw output into the response and tests sections.

    Tags match at line start, case-sensitive. The model's continuation
    starts inside the response section, so a missing [Response] tag at the
    very beginning is tolerated when a [Tests] tag follows.
    """
    lines = raw.splitlines(keepends=True)
    response_start = None
    tests_start = None
    for i, line in enumerate(lines):
        stripped = line.rstrip("\n")
        if stripped == _RESPONSE_TAG and response_start is None:
            response_start = i
        elif stripped == _TESTS_TAG and tests_start is None:
            tests_start = i
    if not raw.strip():
        raise ResponseParseError(_RESPONSE_TAG)
    if tests_start is None:
        raise ResponseParseError(_TESTS_TAG)
    if response_start is None:
        if tests_start == 0:
            raise ResponseParseError(_RESPONSE_TAG)
        response_sec = "".join(lines[:tests_start])
    elif response_start < tests_start:
        response_sec = "".join(lines[response_start + 1:tests_start])
    else:
        raise ResponseParseError(_RESPONSE_TAG)
    tests_sec = "".join(lines[tests_start + 1:])
    return response_sec, tests_sec


def extract_fenced_code(section: str) -> str:
    """Newline-joined concatenation of all fenced blocks, in document order."""
    blocks = [m.group(1).rstrip("\n") for m in _FENCE_RE.finditer(section)]
    return "\n".join(blocks)


def parse_response_and_tests(raw: str) -> tuple[str, str, str]:
    """Returns (response_text, response_code, tests_code) or raises
    ResponseParseError naming the missing part."""
    response_sec, tests_sec = _section_split(raw)
    response_code = extract_fenced_code(response_sec)
    if not response_code:
        raise ResponseParseError("fenced code in [Response]")
    tests_code = extract_fenced_code(tests_sec)
    if not tests_code:
        raise ResponseParseError("fenced code in [Tests]")
    return response_sec.strip("\n"), response_code, tests_code


@dataclass
class CandidateBatch:
    candidates: list[ResponseCandidate] = field(default_factory=list)
    parse_drops: dict[str, int] = field(default_factory=dict)


def generate_candidates(instr: InstructionRecord, gateway: InferenceGateway,
                        pool: PromptPool, rng: random.Random,
                        n: int = DEFAULT_SAMPLES_PER_INSTRUCTION,
                        temperature: float = 0.7) -> CandidateBatch:
    """One request with n samples; the inline-test coin is flipped once per
    instruction before prompting."""
    if n < 1:
        raise ValueError("n must be >= 1")
    inline_test = rng.random() < 0.5
    bundle = build_response_prompt(instr, pool, rng, inline_test=inline_test)
    result = gateway.generate(bundle.to_request(
        temperature=temperature, n_samples=n,
        request_id=f"i2r:{instr.instruction_id}"))
    batch = CandidateBatch()
    for idx, sample in enumerate(result.samples):
        raw = sample["text"]
        try:
            response_text, response_code, tests_code = parse_response_and_tests(raw)
        except ResponseParseError as exc:
            reason = ("no-tests" if exc.missing == _TESTS_TAG
                      else "parse-failure")
            batch.parse_drops[reason] = batch.parse_drops.get(reason, 0) + 1
            continue
        batch.candidates.append(ResponseCandidate(
            candidate_id=f"{instr.instruction_id}#{idx}",
            instruction_id=instr.instruction_id,
            sample_index=idx,
            response_text=response_text,
            response_code=response_code,
            tests_code=tests_code,
            raw=raw))
    return batch


def assemble_validation_program(candidate: ResponseCandidate) -> str:
    """The exact program submitted to the sandbox: code, blank line, tests."""
    return candidate.response_code.rstrip("\n") + "\n\n" + candidate.tests_code
