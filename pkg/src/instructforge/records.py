"""Shared record types and line-delimited JSON helpers."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator


@dataclass
class SourceDocument:
    """One raw corpus file before any curation."""

    doc_id: str
    path: str
    content: str
    language_tag: str = "python"


@dataclass
class SeedFunction:
    """A curated top-level function: imports, signature, docstring, implementation."""

    seed_id: str
    imports: list[str]
    signature: str
    docstring: str
    body: str
    rendered: str
    origin: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_parts(cls, seed_id: str, imports: list[str], signature: str,
                   docstring_block: str, docstring: str, body: str,
                   origin: dict[str, Any] | None = None) -> "SeedFunction":
        rendered = render_seed(imports, signature, docstring_block, body)
        return cls(seed_id=seed_id, imports=list(imports), signature=signature,
                   docstring=docstring, body=body, rendered=rendered,
                   origin=origin or {})


def render_seed(imports: list[str], signature: str, docstring_block: str, body: str) -> str:
    """Canonical seed text: imports (if any), signature, docstring, implementation."""
    parts = []
    if imports:
        parts.append("\n".join(imports))
        parts.append("")
    parts.append(signature)
    parts.append(docstring_block)
    if body:
        parts.append(body)
    return "\n".join(parts)


@dataclass
class ConceptList:
    seed_id: str
    concepts: list[str]


@dataclass
class InstructionRecord:
    instruction_id: str
    seed_id: str
    property: dict[str, Any]
    instruction: str
    prompt_version: str
    example_tests: str | None = None


@dataclass
class ResponseCandidate:
    candidate_id: str
    instruction_id: str
    sample_index: int
    response_text: str
    response_code: str
    tests_code: str
    raw: str


def to_json(record: Any) -> str:
    if dataclasses.is_dataclass(record):
        record = dataclasses.asdict(record)
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: str | Path, records: Iterable[Any]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(to_json(rec) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)
