"""End-to-end orchestration: curate -> concepts -> instructions ->
responses -> validate -> select, with per-stage artifacts, checkpoints,
and crash-safe resume.

Artifacts are written to `<name>.partial` line by line and atomically
renamed on completion. Every generation stage derives its randomness from
the master seed keyed by stage name and record id, so an interrupted and
resumed run produces byte-identical output to an uninterrupted one.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .gateway import BackendConfig, InferenceGateway, RetryPolicy
from .instructions import (ConceptParseError, extract_concepts,
                           generate_instruction)
from .prompts import PromptPool, build_docstring_qc_prompt
from .records import (ConceptList, InstructionRecord, ResponseCandidate,
                      SeedFunction, read_jsonl, to_json, write_jsonl)
from .responses import assemble_validation_program, generate_candidates
from .sandbox import ExecutionRequest, ExecutionVerdict, SandboxClient
from .seeds.dedup import DedupParams
from .seeds.filters import ExternalCheckerConfig
from .seeds.imports import ImportResolver
from .seeds.pipeline import (STAGE_ORDER, CurationConfig, curate_seeds,
                             load_benchmark_strings, load_corpus)
from .selection import (DatasetRecord, SelectionStrategy, StageStats,
                        emit_dataset, revalidate, select)

logger = logging.getLogger(__name__)

RUN_STAGES = ("curate", "concepts", "instructions", "responses", "validate",
              "select")

ARTIFACTS = {
    "curate": "seeds.jsonl",
    "concepts": "concepts.jsonl",
    "instructions": "instructions.jsonl",
    "responses": "candidates.jsonl",
    "validate": "verdicts.jsonl",
    "select": "dataset.jsonl",
}

UPSTREAM = {
    "concepts": "curate",
    "instructions": "concepts",
    "responses": "instructions",
    "validate": "responses",
    "select": "validate",
}


class StaleUpstreamError(RuntimeError):
    pass


class PipelineLockedError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    corpus_path: str = ""
    output_dir: str = "out"
    prompt_asset_dir: str | None = None
    backend: BackendConfig | None = None
    dedup: DedupParams = field(default_factory=DedupParams)
    checker_command: list[str] = field(
        default_factory=lambda: [sys.executable, "-m", "instructforge.checker"])
    benchmark_path: str | None = None
    benchmark_strings: list[str] = field(default_factory=list)
    import_modules: dict[str, str] = field(default_factory=dict)
    curation_stages: list[str] | None = None  # None = all stages
    n_samples: int = 10
    strategy: SelectionStrategy = field(default_factory=SelectionStrategy)
    sandbox_url: str = ""
    sandbox_timeout_s: float = 30.0
    max_parallel_exec: int = 8
    master_seed: int = 0
    language: str = "Python"
    temperature: float = 0.7
    bare: bool = False

    @classmethod
    def from_yaml(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "PipelineConfig":
        kwargs = dict(raw)
        if "backend" in kwargs and isinstance(kwargs["backend"], dict):
            b = dict(kwargs["backend"])
            if "retry" in b and isinstance(b["retry"], dict):
                b["retry"] = RetryPolicy(**b["retry"])
            kwargs["backend"] = BackendConfig(**b)
        if "dedup" in kwargs and isinstance(kwargs["dedup"], dict):
            kwargs["dedup"] = DedupParams(**kwargs["dedup"])
        if "strategy" in kwargs and isinstance(kwargs["strategy"], dict):
            kwargs["strategy"] = SelectionStrategy(**kwargs["strategy"])
        return cls(**kwargs)


def stage_seed(master_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def record_rng(master_seed: int, stage: str, record_id: str) -> random.Random:
    digest = hashlib.sha256(
        f"{master_seed}:{stage}:{record_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Workspace:
    """Paths, checkpoints, and the append-only partial-file protocol."""

    def __init__(self, output_dir: str | Path):
        self.root = Path(output_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "checkpoints").mkdir(exist_ok=True)

    def artifact(self, stage: str) -> Path:
        return self.root / ARTIFACTS[stage]

    def drops(self, stage: str) -> Path:
        return self.root / f"{stage}.drops.jsonl"

    def partial(self, stage: str) -> Path:
        return self.root / f"{ARTIFACTS[stage]}.partial"

    def checkpoint_path(self, stage: str) -> Path:
        return self.root / "checkpoints" / f"{stage}.json"

    def write_checkpoint(self, stage: str, records: int,
                         upstream_sha256: str) -> None:
        payload = {"stage": stage, "records": records,
                   "upstream_sha256": upstream_sha256,
                   "artifact_sha256": file_sha256(self.artifact(stage)),
                   "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                              time.gmtime())}
        self.checkpoint_path(stage).write_text(
            json.dumps(payload, indent=2) + "\n")

    def read_checkpoint(self, stage: str) -> dict | None:
        path = self.checkpoint_path(stage)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def upstream_hash(self, stage: str) -> str:
        up = UPSTREAM.get(stage)
        if up is None:
            return ""
        artifact = self.artifact(up)
        if not artifact.exists():
            raise StaleUpstreamError(
                f"stage {stage} needs {artifact.name}, which does not exist")
        actual = file_sha256(artifact)
        ckpt = self.read_checkpoint(up)
        if ckpt and ckpt.get("artifact_sha256") not in (None, actual):
            raise StaleUpstreamError(
                f"{artifact.name} is stale: checkpoint has "
                f"{ckpt['artifact_sha256']}, file has {actual}")
        return actual

    def lock(self):
        return _RunLock(self.root / ".lock")


class _RunLock:
    def __init__(self, path: Path):
        self.path = path

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise PipelineLockedError(
                f"another run owns {self.path}; remove it if stale") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _resumable_stage(ws: Workspace, stage: str, upstream_sha: str,
                     input_ids: list[str],
                     process: Callable[[str], tuple[list[dict], str | None]],
                     ) -> dict:
    """Run a per-record stage with crash-safe resume.

    `process(input_id)` returns (output_records, drop_reason). Progress is
    appended to the partial file; on completion the clean artifact and the
    drops file are written and the partial removed.
    """
    partial = ws.partial(stage)
    done: dict[str, dict] = {}
    if partial.exists():
        with open(partial, encoding="utf-8") as f:
            header_line = f.readline()
            header = json.loads(header_line) if header_line.strip() else {}
            if header.get("upstream_sha256") != upstream_sha:
                raise StaleUpstreamError(
                    f"partial {partial.name} was built from upstream "
                    f"{header.get('upstream_sha256')}, current is {upstream_sha}")
            for line in f:
                if line.strip():
                    entry = json.loads(line)
                    done[entry["input_id"]] = entry
        mode = "a"
    else:
        mode = "w"

    with open(partial, mode, encoding="utf-8") as f:
        if mode == "w":
            f.write(json.dumps({"stage": stage,
                                "upstream_sha256": upstream_sha}) + "\n")
        for input_id in input_ids:
            if input_id in done:
                continue
            outputs, drop_reason = process(input_id)
            entry = {"input_id": input_id, "outputs": outputs,
                     "drop_reason": drop_reason}
            f.write(to_json(entry) + "\n")
            f.flush()
            done[input_id] = entry

    outputs: list[dict] = []
    drops: list[dict] = []
    for input_id in input_ids:
        entry = done[input_id]
        outputs.extend(entry["outputs"])
        if entry["drop_reason"]:
            drops.append({"input_id": input_id,
                          "reason": entry["drop_reason"]})

    tmp = ws.artifact(stage).with_suffix(".tmp")
    write_jsonl(tmp, outputs)
    os.replace(tmp, ws.artifact(stage))
    write_jsonl(ws.drops(stage), drops)
    partial.unlink()
    ws.write_checkpoint(stage, records=len(outputs),
                        upstream_sha256=upstream_sha)
    reasons: dict[str, int] = {}
    for d in drops:
        reasons[d["reason"]] = reasons.get(d["reason"], 0) + 1
    return {"stage": stage, "inputs": len(input_ids),
            "outputs": len(outputs), "drops": reasons}


class Pipeline:
    def __init__(self, config: PipelineConfig):
        if config.backend is None:
            raise ValueError("pipeline requires a backend config")
        self.config = config
        self.ws = Workspace(config.output_dir)
        self.pool = PromptPool.load(config.prompt_asset_dir)
        self.gateway = InferenceGateway(config.backend)

    def _rng(self, stage: str, record_id: str) -> random.Random:
        return record_rng(self.config.master_seed, stage, record_id)

    # ---- stages -----------------------------------------------------------

    def stage_curate(self) -> dict:
        cfg = self.config
        benchmark_strings = list(cfg.benchmark_strings)
        if cfg.benchmark_path:
            benchmark_strings += load_benchmark_strings(cfg.benchmark_path)
        stages = tuple(cfg.curation_stages) if cfg.curation_stages else STAGE_ORDER
        curation = CurationConfig(
            enabled_stages=stages,
            benchmark_strings=benchmark_strings,
            checker=ExternalCheckerConfig(command=list(cfg.checker_command)),
            resolver=ImportResolver(extra_modules=dict(cfg.import_modules)),
            dedup=dataclasses.replace(
                cfg.dedup, seed=stage_seed(cfg.master_seed, "dedup")))
        seeds, report = curate_seeds(
            load_corpus(cfg.corpus_path), curation,
            gateway=self.gateway,
            qc_prompt_builder=lambda fn: build_docstring_qc_prompt(
                fn, self.pool).to_request(temperature=0.0))
        tmp = self.ws.artifact("curate").with_suffix(".tmp")
        write_jsonl(tmp, seeds)
        os.replace(tmp, self.ws.artifact("curate"))
        (self.ws.root / "curation_report.json").write_text(
            json.dumps(report.as_dict(), indent=2) + "\n")
        self.ws.write_checkpoint("curate", records=len(seeds),
                                 upstream_sha256="")
        return {"stage": "curate", "inputs": report.documents,
                "outputs": len(seeds)}

    def _load_seeds(self) -> dict[str, SeedFunction]:
        return {rec["seed_id"]: SeedFunction(**rec)
                for rec in read_jsonl(self.ws.artifact("curate"))}

    def stage_concepts(self) -> dict:
        upstream_sha = self.ws.upstream_hash("concepts")
        seeds = self._load_seeds()

        def process(seed_id: str):
            try:
                concepts = extract_concepts(
                    seeds[seed_id], self.gateway, self.pool,
                    self._rng("s2c", seed_id),
                    temperature=self.config.temperature)
            except ConceptParseError:
                return [], "concepts-parse-failure"
            return [dataclasses.asdict(concepts)], None

        return _resumable_stage(self.ws, "concepts", upstream_sha,
                                list(seeds), process)

    def stage_instructions(self) -> dict:
        upstream_sha = self.ws.upstream_hash("instructions")
        concept_lists = {rec["seed_id"]: ConceptList(**rec)
                         for rec in read_jsonl(self.ws.artifact("concepts"))}

        def process(seed_id: str):
            try:
                record = generate_instruction(
                    concept_lists[seed_id], self.gateway, self.pool,
                    self._rng("c2i", seed_id),
                    prompt_version=self.pool.version,
                    language=self.config.language,
                    temperature=self.config.temperature)
            except ValueError:
                return [], "empty-instruction"
            return [dataclasses.asdict(record)], None

        return _resumable_stage(self.ws, "instructions", upstream_sha,
                                list(concept_lists), process)

    def stage_responses(self) -> dict:
        upstream_sha = self.ws.upstream_hash("responses")
        instructions = {rec["instruction_id"]: InstructionRecord(**rec)
                        for rec in read_jsonl(self.ws.artifact("instructions"))}

        def process(instruction_id: str):
            batch = generate_candidates(
                instructions[instruction_id], self.gateway, self.pool,
                self._rng("i2r", instruction_id),
                n=self.config.n_samples,
                temperature=self.config.temperature)
            outputs = [dataclasses.asdict(c) for c in batch.candidates]
            if not outputs:
                return [], "all-samples-unparseable"
            return outputs, None

        return _resumable_stage(self.ws, "responses", upstream_sha,
                                list(instructions), process)

    def stage_validate(self) -> dict:
        upstream_sha = self.ws.upstream_hash("validate")
        candidates = {rec["candidate_id"]: ResponseCandidate(**rec)
                      for rec in read_jsonl(self.ws.artifact("responses"))}
        client = SandboxClient(self.config.sandbox_url)

        ids = list(candidates)
        reqs = [ExecutionRequest(
            candidate_id=cid,
            program=assemble_validation_program(candidates[cid]),
            timeout_s=self.config.sandbox_timeout_s) for cid in ids]
        verdicts = client.execute_parallel(
            reqs, max_parallel=self.config.max_parallel_exec)
        by_id = {v.candidate_id: v for v in verdicts}

        def process(cid: str):
            return [dataclasses.asdict(by_id[cid])], None

        return _resumable_stage(self.ws, "validate", upstream_sha, ids, process)

    def stage_select(self) -> dict:
        upstream_sha = self.ws.upstream_hash("select")
        candidates = [ResponseCandidate(**rec)
                      for rec in read_jsonl(self.ws.artifact("responses"))]
        verdicts = [ExecutionVerdict(**rec)
                    for rec in read_jsonl(self.ws.artifact("validate"))]
        instructions = [InstructionRecord(**rec)
                        for rec in read_jsonl(self.ws.artifact("instructions"))]
        strategy = dataclasses.replace(
            self.config.strategy,
            seed=stage_seed(self.config.master_seed, "select"))
        records, stats = select(candidates, verdicts, strategy,
                                instructions=instructions)
        receipt = emit_dataset(records, self.ws.artifact("select"),
                               stats=stats, bare=self.config.bare)
        self.ws.write_checkpoint("select", records=len(records),
                                 upstream_sha256=upstream_sha)
        return {"stage": "select", "outputs": len(records),
                "sha256": receipt["sha256"],
                "execution_pass_rate": stats.execution_pass_rate}

    def stage_revalidate(self) -> dict:
        candidates = [ResponseCandidate(**rec)
                      for rec in read_jsonl(self.ws.artifact("responses"))]
        records = []
        for rec in read_jsonl(self.ws.artifact("select")):
            records.append(DatasetRecord(**rec))
        client = SandboxClient(self.config.sandbox_url)
        violations = revalidate(records, candidates, client,
                                timeout_s=self.config.sandbox_timeout_s,
                                max_parallel=self.config.max_parallel_exec)
        (self.ws.root / "revalidation.json").write_text(
            json.dumps(violations, indent=2) + "\n")
        return {"stage": "revalidate", "records": len(records),
                "violations": len(violations)}

    # ---- orchestration ----------------------------------------------------

    STAGE_FNS = {
        "curate": stage_curate,
        "concepts": stage_concepts,
        "instructions": stage_instructions,
        "responses": stage_responses,
        "validate": stage_validate,
        "select": stage_select,
        "revalidate": stage_revalidate,
    }

    def run_stage(self, name: str) -> dict:
        if name not in self.STAGE_FNS:
            raise ValueError(f"unknown stage {name!r}")
        summary = self.STAGE_FNS[name](self)
        logger.info("stage %s: %s", name, summary)
        return summary

    def run(self) -> dict:
        with self.ws.lock():
            summaries = [self.run_stage(name) for name in RUN_STAGES]
        return {"stages": summaries,
                "execution_pass_rate": summaries[-1].get("execution_pass_rate")}


def collect_stats(output_dir: str | Path) -> dict:
    """Per-stage counts and drop reasons from an existing output directory."""
    ws = Workspace(output_dir)
    missing = [ARTIFACTS[s] for s in RUN_STAGES
               if not ws.artifact(s).exists()]
    if missing:
        raise FileNotFoundError(
            "missing artifacts: " + ", ".join(missing))
    counts = {s: sum(1 for _ in read_jsonl(ws.artifact(s)))
              for s in RUN_STAGES}
    verdicts = list(read_jsonl(ws.artifact("validate")))
    passes = sum(1 for v in verdicts if v["status"] == "pass")
    stats = StageStats(
        instruction_count=counts["instructions"],
        candidate_count=counts["responses"],
        pass_count=passes,
        execution_pass_rate=passes / counts["responses"]
        if counts["responses"] else 0.0,
        final_size=counts["select"])
    drops = {}
    for s in RUN_STAGES:
        path = ws.drops(s)
        if path.exists():
            reasons: dict[str, int] = {}
            for rec in read_jsonl(path):
                reasons[rec["reason"]] = reasons.get(rec["reason"], 0) + 1
            if reasons:
                drops[s] = reasons
    return {"counts": counts, "stats": stats.as_dict(), "drops": drops}
