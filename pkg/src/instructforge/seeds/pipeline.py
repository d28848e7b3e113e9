"""The seed-curation funnel: extract, predict imports, decontaminate,
filter returns, type-check, classify docstrings, near-dedup.

Every stage is auditable: the report records input/kept/removed counts and
removal reasons, and kept + removed always reconciles with the input.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from ..records import SeedFunction, SourceDocument
from .dedup import DedupParams, DedupStats, near_dedup_with_stats
from .extract import extract_functions
from .filters import (ExternalCheckerConfig, decontaminate,
                      docstring_quality_filter, filter_returns,
                      typecheck_filter)
from .imports import ImportResolver, predict_imports

logger = logging.getLogger(__name__)

STAGE_ORDER = ("extract", "import_predict", "decontaminate", "return_filter",
               "typecheck", "docstring_quality", "dedup")


@dataclass
class StageCount:
    stage: str
    input: int = 0
    kept: int = 0
    removed: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def check(self) -> None:
        if self.kept + self.removed != self.input or min(
                self.input, self.kept, self.removed) < 0:
            raise AssertionError(
                f"stage {self.stage}: {self.kept}+{self.removed} != {self.input}")


@dataclass
class CurationReport:
    stages: list[StageCount] = field(default_factory=list)
    documents: int = 0
    unparseable_documents: int = 0
    dedup_group_count: int = 0
    dedup_max_group_size: int = 0

    def add(self, stage: StageCount) -> None:
        stage.check()
        self.stages.append(stage)

    def merge(self, other: "CurationReport") -> None:
        """Fold another shard's report into this one (stage-wise sums)."""
        by_name = {s.stage: s for s in self.stages}
        for st in other.stages:
            mine = by_name.get(st.stage)
            if mine is None:
                self.stages.append(st)
                by_name[st.stage] = st
                continue
            mine.input += st.input
            mine.kept += st.kept
            mine.removed += st.removed
            for k, v in st.reasons.items():
                mine.reasons[k] = mine.reasons.get(k, 0) + v
        self.documents += other.documents
        self.unparseable_documents += other.unparseable_documents

    def as_dict(self) -> dict:
        return {
            "documents": self.documents,
            "unparseable_documents": self.unparseable_documents,
            "stages": [{"stage": s.stage, "input": s.input, "kept": s.kept,
                        "removed": s.removed, "reasons": s.reasons}
                       for s in self.stages],
            "dedup": {"group_count": self.dedup_group_count,
                      "max_group_size": self.dedup_max_group_size},
        }


@dataclass
class CurationConfig:
    enabled_stages: tuple[str, ...] = STAGE_ORDER
    benchmark_strings: list[str] = field(default_factory=list)
    checker: ExternalCheckerConfig | None = None
    resolver: ImportResolver = field(default_factory=ImportResolver)
    dedup: DedupParams = field(default_factory=DedupParams)

    def enabled(self, stage: str) -> bool:
        return stage in self.enabled_stages


def curate_seeds(corpus: Iterable[SourceDocument], config: CurationConfig,
                 gateway=None, qc_prompt_builder: Callable | None = None,
                 ) -> tuple[list[SeedFunction], CurationReport]:
    """Run the full funnel over a corpus of source documents.

    `gateway` and `qc_prompt_builder` are required only when the
    docstring_quality stage is enabled: the builder maps a SeedFunction to
    the GenerationRequest for the binary classifier.
    """
    report = CurationReport()
    fns: list[SeedFunction] = []
    extracted = 0
    for doc in corpus:
        report.documents += 1
        found = extract_functions(doc)
        if not found and doc.content.strip():
            try:
                compile(doc.content, "<doc>", "exec")
            except SyntaxError:
                report.unparseable_documents += 1
        extracted += len(found)
        fns.extend(found)
    report.add(StageCount("extract", input=extracted, kept=extracted, removed=0))

    if config.enabled("import_predict"):
        fns = [predict_imports(fn, config.resolver) for fn in fns]
        report.add(StageCount("import_predict", input=len(fns), kept=len(fns),
                              removed=0))

    if config.enabled("decontaminate"):
        n = len(fns)
        fns = decontaminate(fns, config.benchmark_strings)
        report.add(StageCount("decontaminate", input=n, kept=len(fns),
                              removed=n - len(fns),
                              reasons={"benchmark-overlap": n - len(fns)}))

    if config.enabled("return_filter"):
        n = len(fns)
        fns = filter_returns(fns)
        report.add(StageCount("return_filter", input=n, kept=len(fns),
                              removed=n - len(fns),
                              reasons={"no-value-return": n - len(fns)}))

    if config.enabled("typecheck"):
        if config.checker is None:
            raise ValueError("typecheck stage enabled but no checker configured")
        n = len(fns)
        fns = typecheck_filter(fns, config.checker)
        report.add(StageCount("typecheck", input=n, kept=len(fns),
                              removed=n - len(fns),
                              reasons={"analyzer-error": n - len(fns)}))

    if config.enabled("docstring_quality"):
        if gateway is None or qc_prompt_builder is None:
            raise ValueError("docstring_quality stage needs a gateway and "
                             "prompt builder")
        n = len(fns)
        result = docstring_quality_filter(fns, gateway, qc_prompt_builder)
        fns = result.kept
        report.add(StageCount("docstring_quality", input=n, kept=len(fns),
                              removed=n - len(fns),
                              reasons=result.removal_reasons))

    if config.enabled("dedup"):
        n = len(fns)
        fns, stats = near_dedup_with_stats(fns, config.dedup)
        report.dedup_group_count = stats.group_count
        report.dedup_max_group_size = stats.max_group_size
        report.add(StageCount("dedup", input=n, kept=len(fns),
                              removed=n - len(fns),
                              reasons={"near-duplicate": n - len(fns)}))

    return fns, report


def load_corpus(path: str | Path, language_tag: str = "python"
                ) -> Iterator[SourceDocument]:
    """A directory tree of source files, or a jsonl file of {path, content}."""
    path = Path(path)
    if path.is_dir():
        for i, file in enumerate(sorted(path.rglob("*.py"))):
            rel = file.relative_to(path).as_posix()
            yield SourceDocument(doc_id=f"doc-{i:06d}", path=rel,
                                 content=file.read_text(encoding="utf-8"),
                                 language_tag=language_tag)
    else:
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f):
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                yield SourceDocument(doc_id=rec.get("doc_id", f"doc-{i:06d}"),
                                     path=rec["path"], content=rec["content"],
                                     language_tag=language_tag)


def load_benchmark_strings(path: str | Path) -> list[str]:
    """Plain text (one string per line) or jsonl of {prompt, solution}."""
    out: list[str] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("{"):
                rec = json.loads(line)
                for key in ("prompt", "solution"):
                    if rec.get(key):
                        out.append(rec[key])
            else:
                out.append(line)
    return out
