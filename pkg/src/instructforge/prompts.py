"""Prompt assembly for the three generation phases and the docstring classifier.

Prompts are built from a versioned asset pool of 21 few-shot examples, each
holding (seed, property, instruction, response, tests). Concept and
instruction prompts are eight-shot; response prompts are one-shot with the
shot's response and tests concatenated so the continuation includes tests.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .gateway import GenerationRequest, Message, budgeted_max_new_tokens
from .records import InstructionRecord, SeedFunction

CATEGORIES = ("function implementation", "class implementation",
              "program implementation")
DIFFICULTIES = ("easy", "medium", "hard")

EXAMPLE_DELIMITER = "### Example"

PHASE_S2C = "S2C"
PHASE_C2I = "C2I"
PHASE_I2R = "I2R"
PHASE_DOCSTRING_QC = "DOCSTRING_QC"


@dataclass
class TaskProperty:
    category: str
    language: str
    difficulty: str
    concepts: list[str]

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"invalid category {self.category!r}")
        if self.difficulty not in DIFFICULTIES:
            raise ValueError(f"invalid difficulty {self.difficulty!r}")

    def render(self) -> str:
        return (f"category: {self.category}\n"
                f"language: {self.language}\n"
                f"difficulty: {self.difficulty}\n"
                f"concepts: {', '.join(self.concepts)}")

    def as_dict(self) -> dict:
        return {"category": self.category, "language": self.language,
                "difficulty": self.difficulty, "concepts": list(self.concepts)}


@dataclass
class FewShotExample:
    example_id: str
    seed: str
    property: TaskProperty
    instruction: str
    response: str
    tests: str


@dataclass
class PromptBundle:
    messages: list[Message]
    stop_sequences: list[str]
    phase: str
    shot_ids: list[str] = field(default_factory=list)

    def to_request(self, temperature: float = 0.7, n_samples: int = 1,
                   request_id: str = "") -> GenerationRequest:
        return GenerationRequest(
            messages=self.messages, temperature=temperature,
            max_new_tokens=budgeted_max_new_tokens(self.messages),
            stop_sequences=self.stop_sequences, n_samples=n_samples,
            request_id=request_id)


class PromptPool:
    def __init__(self, version: str, systems: dict[str, str],
                 examples: list[FewShotExample]):
        self.version = version
        self.systems = systems
        self.examples = examples

    @classmethod
    def load(cls, asset_dir: str | Path | None = None) -> "PromptPool":
        import json
        if asset_dir is None:
            asset_dir = Path(str(resources.files("instructforge"))) / "assets" / "prompts"
        asset_dir = Path(asset_dir)
        version = (asset_dir / "VERSION").read_text().strip()
        systems = {
            PHASE_S2C: (asset_dir / "system_s2c.txt").read_text().strip(),
            PHASE_C2I: (asset_dir / "system_c2i.txt").read_text().strip(),
            PHASE_I2R: (asset_dir / "system_i2r.txt").read_text().strip(),
            PHASE_DOCSTRING_QC:
                (asset_dir / "system_docstring_qc.txt").read_text().strip(),
        }
        examples = []
        with open(asset_dir / "examples.jsonl", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                examples.append(FewShotExample(
                    example_id=rec["example_id"], seed=rec["seed"],
                    property=TaskProperty(**rec["property"]),
                    instruction=rec["instruction"], response=rec["response"],
                    tests=rec["tests"]))
        return cls(version=version, systems=systems, examples=examples)

    def sample_shots(self, rng: random.Random, k: int) -> list[FewShotExample]:
        if len(self.examples) < k:
            raise ValueError(f"pool has {len(self.examples)} examples, need {k}")
        return rng.sample(self.examples, k)


def sample_property(rng: random.Random, concepts: list[str],
                    language: str = "Python") -> TaskProperty:
    """Uniform difficulty and category; concepts pass through unchanged."""
    if not concepts:
        raise ValueError("concepts must be non-empty")
    return TaskProperty(category=rng.choice(CATEGORIES), language=language,
                        difficulty=rng.choice(DIFFICULTIES),
                        concepts=list(concepts))


class DelimiterCollisionError(ValueError):
    """Input text contains the example delimiter and would corrupt the prompt."""


def _check_delimiter(text: str, what: str) -> None:
    if EXAMPLE_DELIMITER in text:
        raise DelimiterCollisionError(
            f"{what} contains the prompt delimiter {EXAMPLE_DELIMITER!r}")


def _example_header(i: int) -> str:
    return f"{EXAMPLE_DELIMITER} {i}"


def build_concepts_prompt(seed: SeedFunction, pool: PromptPool,
                          rng: random.Random) -> PromptBundle:
    """Eight-shot seed-to-concepts prompt ending in an open [Concepts] slot."""
    _check_delimiter(seed.rendered, f"seed {seed.seed_id}")
    shots = pool.sample_shots(rng, 8)
    blocks = []
    for i, shot in enumerate(shots, start=1):
        blocks.append(f"{_example_header(i)}\n[Code]\n{shot.seed}\n\n"
                      f"[Concepts]\n{', '.join(shot.property.concepts)}")
    blocks.append(f"{_example_header(len(shots) + 1)}\n[Code]\n{seed.rendered}\n\n"
                  "[Concepts]\n")
    return PromptBundle(
        messages=[Message("system", pool.systems[PHASE_S2C]),
                  Message("user", "\n\n".join(blocks))],
        stop_sequences=[EXAMPLE_DELIMITER], phase=PHASE_S2C,
        shot_ids=[s.example_id for s in shots])


def build_instruction_prompt(property: TaskProperty, pool: PromptPool,
                             rng: random.Random) -> PromptBundle:
    """Eight-shot property-to-instruction prompt with an open [Instruction] slot."""
    if not property.concepts:
        raise ValueError("property.concepts must be non-empty")
    _check_delimiter(property.render(), "task property")
    shots = pool.sample_shots(rng, 8)
    blocks = []
    for i, shot in enumerate(shots, start=1):
        blocks.append(f"{_example_header(i)}\n[Property]\n{shot.property.render()}\n\n"
                      f"[Instruction]\n{shot.instruction}")
    blocks.append(f"{_example_header(len(shots) + 1)}\n[Property]\n{property.render()}\n\n"
                  "[Instruction]\n")
    return PromptBundle(
        messages=[Message("system", pool.systems[PHASE_C2I]),
                  Message("user", "\n\n".join(blocks))],
        stop_sequences=[EXAMPLE_DELIMITER], phase=PHASE_C2I,
        shot_ids=[s.example_id for s in shots])


_ASSERT_BLOCK_RE = re.compile(r"```(?:\w+)?\n(.*?)```", re.S)


def conforming_test_block(text: str) -> str | None:
    """A fenced code block whose non-blank lines are all assert statements."""
    for match in _ASSERT_BLOCK_RE.finditer(text):
        lines = [ln.strip() for ln in match.group(1).splitlines() if ln.strip()]
        if lines and all(ln.startswith("assert ") for ln in lines):
            return match.group(0)
    return None


def build_response_prompt(instr: InstructionRecord, pool: PromptPool,
                          rng: random.Random, inline_test: bool) -> PromptBundle:
    """One-shot instruction-to-response prompt; the shot concatenates its
    response and tests so the model continues with tests of its own.

    When `inline_test` is set (caller flips the coin at p=0.5) and the
    instruction carries a conforming assert-block example test, that test is
    appended to the instruction body.
    """
    _check_delimiter(instr.instruction, f"instruction {instr.instruction_id}")
    shots = pool.sample_shots(rng, 1)
    shot = shots[0]
    instruction_body = instr.instruction
    if inline_test and instr.example_tests:
        if conforming_test_block(instr.example_tests):
            instruction_body = instruction_body.rstrip() + "\n\n" + instr.example_tests
    blocks = [
        f"{_example_header(1)}\n[Instruction]\n{shot.instruction}\n\n"
        f"[Response]\n{shot.response}\n\n[Tests]\n{shot.tests}",
        f"{_example_header(2)}\n[Instruction]\n{instruction_body}\n\n[Response]\n",
    ]
    return PromptBundle(
        messages=[Message("system", pool.systems[PHASE_I2R]),
                  Message("user", "\n\n".join(blocks))],
        stop_sequences=[EXAMPLE_DELIMITER], phase=PHASE_I2R,
        shot_ids=[shot.example_id])


def build_docstring_qc_prompt(fn: SeedFunction, pool: PromptPool) -> PromptBundle:
    return PromptBundle(
        messages=[Message("system", pool.systems[PHASE_DOCSTRING_QC]),
                  Message("user", fn.rendered)],
        stop_sequences=["\n"], phase=PHASE_DOCSTRING_QC, shot_ids=[])
