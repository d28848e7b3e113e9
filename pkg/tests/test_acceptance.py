"""Acceptance gate: each test prints one PASS/FAIL line for its criterion.

Run with `pytest tests/test_acceptance.py -s` to see the lines inline.
"""
import contextlib
import itertools
import random
import time
from pathlib import Path

import funnel_fixture
import pytest
from e2e_helpers import (artifact_bytes, build_transcript, make_config,
                        response_keys, write_corpus)
from helpers import TranscriptBuilder, simple_seed

from instructforge.gateway import UnscriptedRequestError
from instructforge.pipeline import Pipeline, record_rng
from instructforge.prompts import (TaskProperty, build_concepts_prompt,
                                   build_instruction_prompt,
                                   build_response_prompt)
from instructforge.records import (InstructionRecord, ResponseCandidate,
                                   SeedFunction, read_jsonl)
from instructforge.sandbox import (ExecutionRequest, ExecutionVerdict,
                                   SandboxClient)
from instructforge.seeds.dedup import (DedupParams, duplicate_groups,
                                       exact_jaccard, shingle_set)
from instructforge.seeds.pipeline import curate_seeds
from instructforge.selection import SelectionStrategy, select

GOLDENS = Path(__file__).parent / "goldens"


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def test_curation_funnel_fidelity(tmp_path, pool):
    with criterion("curation funnel fidelity on the 40-function fixture"):
        docs, config, gateway, builder = funnel_fixture.build_world(tmp_path,
                                                                    pool)
        start = time.monotonic()
        seeds, report = curate_seeds(docs, config, gateway=gateway,
                                     qc_prompt_builder=builder)
        elapsed = time.monotonic() - start
        assert [s.seed_id for s in seeds] == funnel_fixture.EXPECTED_SURVIVORS
        by_stage = {st.stage: st for st in report.stages}
        for stage, (n_in, kept, removed) in \
                funnel_fixture.EXPECTED_STAGE_COUNTS.items():
            st = by_stage[stage]
            assert (st.input, st.kept, st.removed) == (n_in, kept, removed), \
                stage
            assert st.kept + st.removed == st.input, stage
        assert elapsed < 10.0, f"funnel took {elapsed:.1f}s"


def _random_words(rng, n):
    return [f"w{rng.randrange(10**9)}" for _ in range(n)]


def test_dedup_oracle_equivalence():
    with criterion("dedup LSH matches exact-Jaccard grouping over "
                   "50 corpora (no violations outside J in [0.4, 0.6])"):
        rng = random.Random(2024)
        params = DedupParams()
        start = time.monotonic()
        violations = 0
        for trial in range(50):
            n = rng.randrange(50, 201)
            texts = []
            while len(texts) < n:
                size = rng.choice([1, 1, 1, 1, 2, 3])
                base = _random_words(rng, rng.randrange(30, 60))
                for _ in range(size):
                    tail = _random_words(rng, rng.randrange(1, 4))
                    texts.append(" ".join(base + tail))
            # a few mid-similarity pairs near the margin band
            for _ in range(3):
                base = _random_words(rng, 34)
                texts.append(" ".join(base + _random_words(rng, 10)))
                texts.append(" ".join(base + _random_words(rng, 10)))
            texts = texts[:n]
            fns = [SeedFunction(seed_id=f"s{i:04d}", imports=[], signature="",
                                docstring="", body="", rendered=t)
                   for i, t in enumerate(texts)]

            shingles = {fn.seed_id: shingle_set(fn.rendered) for fn in fns}
            groups, _ = duplicate_groups(fns, params)
            member_of = {}
            for root, members in groups.items():
                for sid in members:
                    member_of[sid] = root
            for fn in fns:
                member_of.setdefault(fn.seed_id, fn.seed_id)

            for a, b in itertools.combinations(fns, 2):
                j = exact_jaccard(shingles[a.seed_id], shingles[b.seed_id])
                if 0.4 <= j <= 0.6:
                    continue
                lsh_same = member_of[a.seed_id] == member_of[b.seed_id]
                if lsh_same != (j >= params.threshold):
                    violations += 1
        elapsed = time.monotonic() - start
        assert violations == 0, f"{violations} grouping violations"
        assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"


def test_prompt_goldens_and_coin(pool):
    with criterion("prompt golden files byte-match; 8/8/1 shot counts; "
                   "inline-test coin at 0.5 within 3% over 10,000 flips"):
        def render(bundle):
            return "\n".join(f"<<{m.role}>>\n{m.content}"
                             for m in bundle.messages)

        s2c = build_concepts_prompt(simple_seed(), pool, random.Random(0))
        assert render(s2c) == (GOLDENS / "s2c_prompt.txt").read_text()
        assert s2c.messages[1].content.count("### Example") == 9
        assert len(s2c.shot_ids) == 8

        prop = TaskProperty(category="class implementation",
                            language="Python", difficulty="hard",
                            concepts=["string manipulation", "list slicing",
                                      "error handling", "recursion"])
        c2i = build_instruction_prompt(prop, pool, random.Random(1))
        assert render(c2i) == (GOLDENS / "c2i_prompt.txt").read_text()
        assert c2i.messages[1].content.count("### Example") == 9
        assert len(c2i.shot_ids) == 8

        instr = InstructionRecord(
            instruction_id="instr:demo", seed_id="demo",
            property=prop.as_dict(),
            instruction="Write a Python function `top_k` that returns the k "
                        "largest items of a list without sorting the whole "
                        "list.",
            prompt_version=pool.version,
            example_tests="```python\nassert top_k([3, 1, 2], 2) == "
                          "[3, 2]\n```")
        i2r = build_response_prompt(instr, pool, random.Random(2),
                                    inline_test=True)
        assert render(i2r) == (GOLDENS / "i2r_prompt.txt").read_text()
        assert i2r.messages[1].content.count("### Example") == 2
        assert len(i2r.shot_ids) == 1

        flips = sum(record_rng(0, "i2r", f"instr:{i}").random() < 0.5
                    for i in range(10_000))
        assert abs(flips / 10_000 - 0.5) <= 0.03, f"coin bias {flips}"


def test_mock_end_to_end_determinism(tmp_path, stub_sandbox, pool):
    with criterion("mock end-to-end: 20 seeds, dataset byte-identical over "
                   "3 runs and a crash-resume run; one record per "
                   "instruction; provenance resolves"):
        corpus = write_corpus(tmp_path, 20)
        transcript, tb, _ = build_transcript(corpus, tmp_path,
                                             stub_sandbox.url, pool)
        outputs = []
        for tag in range(3):
            out = tmp_path / f"run-{tag}"
            cfg = make_config(corpus, out, transcript, stub_sandbox.url)
            Pipeline(cfg).run()
            outputs.append(out)
        baseline = artifact_bytes(outputs[0])
        assert all(artifact_bytes(o) == baseline for o in outputs[1:])

        seeds = {r["seed_id"] for r in read_jsonl(outputs[0] / "seeds.jsonl")}
        assert len(seeds) == 20
        instrs = list(read_jsonl(outputs[0] / "instructions.jsonl"))
        instr_ids = {r["instruction_id"] for r in instrs}
        cands = {r["candidate_id"]
                 for r in read_jsonl(outputs[0] / "candidates.jsonl")}
        dataset = list(read_jsonl(outputs[0] / "dataset.jsonl"))
        picked = [r["provenance"]["instruction_id"] for r in dataset]
        assert len(picked) == len(set(picked))
        for rec in dataset:
            prov = rec["provenance"]
            assert prov["seed_id"] in seeds
            assert prov["instruction_id"] in instr_ids
            assert prov["candidate_id"] in cands

        # crash mid-responses by withholding the last two scripted replies
        crash_ids = {r["instruction_id"] for r in instrs[-2:]}
        keys = response_keys(outputs[0], pool, 0, crash_ids)
        partial_tb = TranscriptBuilder()
        partial_tb.entries = {k: v for k, v in tb.entries.items()
                              if k not in keys}
        crash_transcript = tmp_path / "transcript-crash.jsonl"
        partial_tb.write(crash_transcript)
        out = tmp_path / "run-crash"
        cfg = make_config(corpus, out, crash_transcript, stub_sandbox.url)
        for stage in ("curate", "concepts", "instructions"):
            Pipeline(cfg).run_stage(stage)
        with pytest.raises(UnscriptedRequestError):
            Pipeline(cfg).run_stage("responses")
        resume_cfg = make_config(corpus, out, transcript, stub_sandbox.url)
        for stage in ("responses", "validate", "select"):
            Pipeline(resume_cfg).run_stage(stage)
        assert artifact_bytes(out) == baseline


def _selection_world(n_instructions):
    candidates, verdicts = [], []
    for i in range(n_instructions):
        iid = f"instr:{i:04d}"
        for idx in range(3):
            cid = f"{iid}#{idx}"
            candidates.append(ResponseCandidate(
                candidate_id=cid, instruction_id=iid, sample_index=idx,
                response_text=f"resp {cid}", response_code="def f():\n"
                "    return 1", tests_code="assert f() == 1", raw=""))
            status = "pass" if idx != (i % 3) else "fail"
            verdicts.append(ExecutionVerdict(
                candidate_id=cid, status=status,
                exit_code=0 if status == "pass" else 1,
                stdout_tail="", stderr_tail="", duration_ms=1))
    return candidates, verdicts, {v.candidate_id: v.status for v in verdicts}


def test_table_semantics_selection():
    with criterion("selection semantics: passes_only 100% pass rate, "
                   "failures_only 0%, random_subset picks 156 of 277"):
        candidates, verdicts, status_of = _selection_world(277)

        records, _ = select(candidates, verdicts,
                            SelectionStrategy("passes_only", seed=1))
        assert len(records) == 277
        assert all(status_of[r.provenance["candidate_id"]] == "pass"
                   for r in records)

        records, _ = select(candidates, verdicts,
                            SelectionStrategy("failures_only", seed=1))
        assert len(records) == 277
        assert all(status_of[r.provenance["candidate_id"]] != "pass"
                   for r in records)

        records, stats = select(
            candidates, verdicts,
            SelectionStrategy("random_subset", subset_size=156, seed=1))
        assert stats.final_size == 156
        assert len({r.provenance["instruction_id"] for r in records}) == 156


def test_sandbox_protocol_conformance(fresh_stub_sandbox):
    with criterion("sandbox protocol: pass/fail/timeout trichotomy and "
                   "bounded execute_parallel concurrency"):
        client = SandboxClient(fresh_stub_sandbox.url)
        assert client.healthy()
        trio = [
            ExecutionRequest("p", "assert 1 + 1 == 2", timeout_s=10),
            ExecutionRequest("f", "assert False", timeout_s=10),
            ExecutionRequest("t", "while True:\n    pass", timeout_s=1),
        ]
        verdicts = {v.candidate_id: v for v in
                    client.execute_parallel(trio, max_parallel=3)}
        assert verdicts["p"].status == "pass" and verdicts["p"].exit_code == 0
        assert verdicts["f"].status == "fail" and verdicts["f"].exit_code != 0
        assert verdicts["t"].status == "timeout"

        reqs = [ExecutionRequest(f"c{i}", "import time\ntime.sleep(0.3)",
                                 timeout_s=10) for i in range(8)]
        client.execute_parallel(reqs, max_parallel=4)
        state = fresh_stub_sandbox.state
        assert state.peak_in_flight <= 4
        assert state.requests == 11
