"""Shared test scaffolding: transcript building and fixture seeds."""
from __future__ import annotations

import json
from pathlib import Path

from instructforge.gateway import (BackendConfig, InferenceGateway, Message,
                                   transcript_key)
from instructforge.records import SeedFunction, SourceDocument
from instructforge.seeds.extract import extract_functions


class TranscriptBuilder:
    def __init__(self) -> None:
        self.entries: dict[str, list[str]] = {}

    def script(self, messages: list[Message], n_samples: int,
               samples: list[str]) -> None:
        self.entries[transcript_key(messages, n_samples)] = samples

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as f:
            for key, samples in self.entries.items():
                f.write(json.dumps({"key_hash": key, "samples": samples}) + "\n")
        return path

    def gateway(self, path: str | Path, max_in_flight: int = 8) -> InferenceGateway:
        self.write(path)
        return InferenceGateway(BackendConfig(
            kind="scripted_mock", transcript_path=str(path),
            max_in_flight=max_in_flight))


def make_doc(doc_id: str, content: str) -> SourceDocument:
    return SourceDocument(doc_id=doc_id, path=f"{doc_id}.py", content=content)


def seed_from_source(source: str, doc_id: str = "doc") -> SeedFunction:
    seeds = extract_functions(make_doc(doc_id, source))
    assert len(seeds) == 1, f"expected 1 seed, got {len(seeds)}"
    return seeds[0]


def simple_seed(name: str = "add_one", doc_id: str = "doc") -> SeedFunction:
    return seed_from_source(
        f'def {name}(x):\n'
        f'    """Add one to x and return it."""\n'
        f'    return x + 1\n', doc_id=doc_id)


def response_sample(code: str, tests: str, prose: str = "Here is the solution:"
                    ) -> str:
    """Model output in the [Response]/[Tests] grammar with fenced code."""
    return (f"{prose}\n\n```python\n{code}\n```\n\n"
            f"[Tests]\n```python\n{tests}\n```\n")
