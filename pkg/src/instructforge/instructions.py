"""Concept extraction and instruction generation.

Each seed is prompted for a concept list, then a task property is sampled
and the model generates a coding task conditioned on it. Model text is
parsed into structured records; anything unparseable is dropped with an
accounted reason, never fabricated.
"""
from __future__ import annotations

import ast
import logging
import random
import re
from dataclasses import dataclass, field
from typing import Callable

from .gateway import InferenceGateway
from .prompts import (PromptPool, build_concepts_prompt,
                      build_instruction_prompt, conforming_test_block,
                      sample_property)
from .records import ConceptList, InstructionRecord, SeedFunction

logger = logging.getLogger(__name__)

DEFAULT_CONCEPT_CAP = 8

# maps (phase, record_id) to a deterministic per-record rng
RngFactory = Callable[[str, str], random.Random]


class ConceptParseError(ValueError):
    pass


_BRACKET_RE = re.compile(r"\[.*?\]", re.S)


def parse_concepts(text: str, cap: int = DEFAULT_CONCEPT_CAP) -> list[str]:
    """Accepts a bracketed quoted list or a bare comma-separated line.

    Entries are trimmed and case-insensitively deduplicated, preserving
    first occurrence; the list is capped to bound downstream prompt size.
    """
    items: list[str] | None = None
    match = _BRACKET_RE.search(text)
    if match:
        try:
            parsed = ast.literal_eval(match.group(0))
            if isinstance(parsed, (list, tuple)) and all(
                    isinstance(x, str) for x in parsed):
                items = list(parsed)
        except (ValueError, SyntaxError):
            items = None
    if items is None:
        for line in text.splitlines():
            line = line.strip()
            if line and "," in line:
                items = line.split(",")
                break
        else:
            # a single bare concept on its own line still counts
            stripped = text.strip()
            if stripped and "\n" not in stripped and len(stripped) < 200:
                items = [stripped]
    if items is None:
        raise ConceptParseError("no concept list found in model output")

    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        item = item.strip().strip("'\"").strip()
        if not item or item.lower() in seen:
            continue
        seen.add(item.lower())
        out.append(item)
        if len(out) >= cap:
            break
    if not out:
        raise ConceptParseError("concept list empty after normalization")
    return out


def extract_concepts(seed: SeedFunction, gateway: InferenceGateway,
                     pool: PromptPool, rng: random.Random,
                     temperature: float = 0.7,
                     cap: int = DEFAULT_CONCEPT_CAP) -> ConceptList:
    bundle = build_concepts_prompt(seed, pool, rng)
    result = gateway.generate(bundle.to_request(
        temperature=temperature, request_id=f"s2c:{seed.seed_id}"))
    text = result.samples[0]["text"]
    concepts = parse_concepts(text, cap=cap)
    return ConceptList(seed_id=seed.seed_id, concepts=concepts)


@dataclass
class GeneratedInstruction:
    record: InstructionRecord


def split_trailing_example_tests(text: str) -> tuple[str, str | None]:
    """If the instruction ends with a conforming assert block, split it off
    so the response stage can re-inline it behind the 50% coin."""
    block = conforming_test_block(text)
    if block and text.rstrip().endswith(block):
        body = text[:text.rstrip().rfind(block)].rstrip()
        if body:
            return body, block
    return text, None


def generate_instruction(concepts: ConceptList, gateway: InferenceGateway,
                         pool: PromptPool, rng: random.Random,
                         prompt_version: str, language: str = "Python",
                         temperature: float = 0.7) -> InstructionRecord:
    prop = sample_property(rng, concepts.concepts, language=language)
    bundle = build_instruction_prompt(prop, pool, rng)
    result = gateway.generate(bundle.to_request(
        temperature=temperature, request_id=f"c2i:{concepts.seed_id}"))
    text = result.samples[0]["text"].strip()
    text = re.sub(r"^\[Instruction\]\s*", "", text)
    if not text:
        raise ValueError("empty instruction generation")
    body, example_tests = split_trailing_example_tests(text)
    return InstructionRecord(
        instruction_id=f"instr:{concepts.seed_id}",
        seed_id=concepts.seed_id,
        property=prop.as_dict(),
        instruction=body,
        prompt_version=prompt_version,
        example_tests=example_tests)


@dataclass
class InstructionStageResult:
    records: list[InstructionRecord] = field(default_factory=list)
    concept_lists: list[ConceptList] = field(default_factory=list)
    drops: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1


def run_instruction_stage(seeds: list[SeedFunction], gateway: InferenceGateway,
                          pool: PromptPool, rng_for: RngFactory,
                          language: str = "Python",
                          temperature: float = 0.7) -> InstructionStageResult:
    """Sequential reference implementation; the orchestrator shards and
    checkpoints around per-record calls, so the per-seed rng is keyed by
    seed_id rather than drawn from a shared stream."""
    result = InstructionStageResult()
    for seed in seeds:
        try:
            concepts = extract_concepts(seed, gateway, pool,
                                        rng_for("s2c", seed.seed_id),
                                        temperature=temperature)
        except ConceptParseError:
            result.drop("concepts-parse-failure")
            continue
        result.concept_lists.append(concepts)
        try:
            record = generate_instruction(concepts, gateway, pool,
                                          rng_for("c2i", seed.seed_id),
                                          prompt_version=pool.version,
                                          language=language,
                                          temperature=temperature)
        except ValueError:
            result.drop("empty-instruction")
            continue
        result.records.append(record)
    return result
