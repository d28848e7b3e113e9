"""Final dataset selection over execution verdicts.

Four strategies mirror the ablation modes: keep one passing response per
instruction (the default), one failing response, one random response, or a
random instruction-level subset of the random selection. All draws are
uniform under the strategy seed.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .records import InstructionRecord, ResponseCandidate, to_json
from .responses import assemble_validation_program
from .sandbox import ExecutionRequest, ExecutionVerdict, SandboxClient

STRATEGY_KINDS = ("passes_only", "failures_only", "random_all", "random_subset")


@dataclass
class SelectionStrategy:
    kind: str = "passes_only"
    subset_size: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind == "random_subset" and (self.subset_size is None
                                             or self.subset_size < 1):
            raise ValueError("random_subset requires a positive subset_size")


@dataclass
class DatasetRecord:
    instruction: str
    response: str
    provenance: dict = field(default_factory=dict)


@dataclass
class StageStats:
    instruction_count: int = 0
    candidate_count: int = 0
    pass_count: int = 0
    execution_pass_rate: float = 0.0
    final_size: int = 0

    def as_dict(self) -> dict:
        return {"instruction_count": self.instruction_count,
                "candidate_count": self.candidate_count,
                "pass_count": self.pass_count,
                "execution_pass_rate": self.execution_pass_rate,
                "final_size": self.final_size}


class VerdictIntegrityError(RuntimeError):
    pass


def select(candidates: list[ResponseCandidate],
           verdicts: list[ExecutionVerdict],
           strategy: SelectionStrategy,
           instructions: list[InstructionRecord] | None = None,
           ) -> tuple[list[DatasetRecord], StageStats]:
    """Pick at most one candidate per instruction according to the strategy."""
    verdict_by_id = {v.candidate_id: v for v in verdicts}
    missing = [c.candidate_id for c in candidates
               if c.candidate_id not in verdict_by_id]
    if missing:
        raise VerdictIntegrityError(
            f"{len(missing)} candidates lack verdicts, e.g. {missing[0]}")

    instr_meta = {i.instruction_id: i for i in (instructions or [])}
    by_instruction: dict[str, list[ResponseCandidate]] = {}
    for c in candidates:
        by_instruction.setdefault(c.instruction_id, []).append(c)

    rng = random.Random(strategy.seed)
    stats = StageStats(instruction_count=len(by_instruction),
                       candidate_count=len(candidates),
                       pass_count=sum(1 for v in verdicts
                                      if v.status == "pass"))
    if stats.candidate_count:
        stats.execution_pass_rate = stats.pass_count / stats.candidate_count

    records: list[DatasetRecord] = []
    # instruction order is sorted for determinism regardless of input order
    for instruction_id in sorted(by_instruction):
        group = sorted(by_instruction[instruction_id],
                       key=lambda c: c.candidate_id)
        if strategy.kind == "passes_only":
            eligible = [c for c in group
                        if verdict_by_id[c.candidate_id].status == "pass"]
        elif strategy.kind == "failures_only":
            eligible = [c for c in group
                        if verdict_by_id[c.candidate_id].status != "pass"]
        else:
            eligible = group
        if not eligible:
            continue
        chosen = rng.choice(eligible)
        meta = instr_meta.get(instruction_id)
        records.append(DatasetRecord(
            instruction=meta.instruction if meta else "",
            response=chosen.response_text,
            provenance={
                "seed_id": meta.seed_id if meta else None,
                "instruction_id": instruction_id,
                "candidate_id": chosen.candidate_id,
                "prompt_version": meta.prompt_version if meta else None,
                "strategy": strategy.kind,
            }))

    if strategy.kind == "random_subset" and len(records) > strategy.subset_size:
        records = rng.sample(records, strategy.subset_size)
        records.sort(key=lambda r: r.provenance["instruction_id"])

    stats.final_size = len(records)
    return records, stats


def emit_dataset(records: list[DatasetRecord], path: str | Path,
                 stats: StageStats | None = None, bare: bool = False) -> dict:
    """Write dataset.jsonl (stable order by instruction_id) plus a stats
    sidecar; returns a write receipt with counts and the content hash."""
    path = Path(path)
    ordered = sorted(records, key=lambda r: r.provenance.get("instruction_id", ""))
    lines = []
    for rec in ordered:
        payload = {"instruction": rec.instruction, "response": rec.response}
        if not bare:
            payload["provenance"] = rec.provenance
        lines.append(to_json(payload))
    content = "".join(line + "\n" for line in lines)
    path.write_text(content, encoding="utf-8")
    if stats is not None:
        stats_path = path.with_suffix(".stats.json")
        stats_path.write_text(json.dumps(stats.as_dict(), indent=2) + "\n",
                              encoding="utf-8")
    return {"path": str(path), "records": len(ordered),
            "sha256": hashlib.sha256(content.encode("utf-8")).hexdigest()}


def revalidate(records: list[DatasetRecord],
               candidates: list[ResponseCandidate],
               sandbox: SandboxClient, timeout_s: float = 30.0,
               max_parallel: int = 8) -> list[dict]:
    """Re-execute each record's assembled program; returns the (expected
    empty, for passes_only datasets) list of records that no longer pass."""
    by_id = {c.candidate_id: c for c in candidates}
    reqs = []
    index: list[DatasetRecord] = []
    violations: list[dict] = []
    for rec in records:
        cid = rec.provenance.get("candidate_id")
        candidate = by_id.get(cid)
        if candidate is None:
            violations.append({"candidate_id": cid,
                               "reason": "candidate-not-found"})
            continue
        reqs.append(ExecutionRequest(
            candidate_id=cid,
            program=assemble_validation_program(candidate),
            timeout_s=timeout_s))
        index.append(rec)
    verdicts = sandbox.execute_parallel(reqs, max_parallel=max_parallel)
    for rec, verdict in zip(index, verdicts):
        if verdict.status != "pass":
            violations.append({
                "candidate_id": verdict.candidate_id,
                "instruction_id": rec.provenance.get("instruction_id"),
                "reason": f"status-{verdict.status}",
                "stderr_tail": verdict.stderr_tail,
            })
    return violations
