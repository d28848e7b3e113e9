import random
from pathlib import Path

import pytest
from helpers import simple_seed

from instructforge.prompts import (CATEGORIES, DIFFICULTIES,
                                   DelimiterCollisionError, TaskProperty,
                                   build_concepts_prompt,
                                   build_instruction_prompt,
                                   build_response_prompt,
                                   conforming_test_block, sample_property)
from instructforge.records import InstructionRecord

GOLDENS = Path(__file__).parent / "goldens"


def render(bundle):
    return "\n".join(f"<<{m.role}>>\n{m.content}" for m in bundle.messages)


def demo_property():
    return TaskProperty(category="class implementation", language="Python",
                        difficulty="hard",
                        concepts=["string manipulation", "list slicing",
                                  "error handling", "recursion"])


def demo_instruction(pool):
    return InstructionRecord(
        instruction_id="instr:demo", seed_id="demo",
        property=demo_property().as_dict(),
        instruction="Write a Python function `top_k` that returns the k "
                    "largest items of a list without sorting the whole list.",
        prompt_version=pool.version,
        example_tests="```python\nassert top_k([3, 1, 2], 2) == [3, 2]\n```")


# ---- golden files ----------------------------------------------------------

def test_s2c_golden(pool):
    bundle = build_concepts_prompt(simple_seed(), pool, random.Random(0))
    assert render(bundle) == (GOLDENS / "s2c_prompt.txt").read_text()


def test_c2i_golden(pool):
    bundle = build_instruction_prompt(demo_property(), pool, random.Random(1))
    assert render(bundle) == (GOLDENS / "c2i_prompt.txt").read_text()


def test_i2r_golden(pool):
    bundle = build_response_prompt(demo_instruction(pool), pool,
                                   random.Random(2), inline_test=True)
    assert render(bundle) == (GOLDENS / "i2r_prompt.txt").read_text()


# ---- shot-count law --------------------------------------------------------

def test_s2c_has_exactly_eight_examples(pool):
    bundle = build_concepts_prompt(simple_seed(), pool, random.Random(3))
    body = bundle.messages[1].content
    # 8 shots plus the open slot
    assert body.count("### Example") == 9
    assert len(bundle.shot_ids) == 8
    assert len(set(bundle.shot_ids)) == 8
    assert body.rstrip().endswith("[Concepts]")


def test_c2i_has_exactly_eight_examples(pool):
    bundle = build_instruction_prompt(demo_property(), pool, random.Random(4))
    assert bundle.messages[1].content.count("### Example") == 9
    assert len(bundle.shot_ids) == 8


def test_i2r_has_exactly_one_example(pool):
    bundle = build_response_prompt(demo_instruction(pool), pool,
                                   random.Random(5), inline_test=False)
    assert bundle.messages[1].content.count("### Example") == 2
    assert len(bundle.shot_ids) == 1


# ---- phase leakage ---------------------------------------------------------

def test_s2c_contains_no_foreign_sections(pool):
    body = build_concepts_prompt(simple_seed(), pool,
                                 random.Random(6)).messages[1].content
    for tag in ("[Instruction]", "[Response]", "[Tests]", "[Property]"):
        assert tag not in body
    assert "[Code]" in body and "[Concepts]" in body


def test_c2i_contains_no_foreign_sections(pool):
    body = build_instruction_prompt(demo_property(), pool,
                                    random.Random(7)).messages[1].content
    for tag in ("[Code]", "[Concepts]", "[Response]", "[Tests]"):
        assert tag not in body


# ---- determinism -----------------------------------------------------------

def test_bundles_deterministic_under_seed(pool):
    a = build_concepts_prompt(simple_seed(), pool, random.Random(42))
    b = build_concepts_prompt(simple_seed(), pool, random.Random(42))
    assert render(a) == render(b) and a.shot_ids == b.shot_ids


def test_property_block_canonical_key_order(pool):
    prop = demo_property()
    text = prop.render()
    lines = text.splitlines()
    assert [ln.split(":")[0] for ln in lines] == [
        "category", "language", "difficulty", "concepts"]
    assert lines[3] == ("concepts: string manipulation, list slicing, "
                        "error handling, recursion")


# ---- property sampling -----------------------------------------------------

def test_sample_property_deterministic():
    a = sample_property(random.Random(0), ["x"])
    b = sample_property(random.Random(0), ["x"])
    assert (a.category, a.difficulty) == (b.category, b.difficulty)


def test_sample_property_passthrough_and_validation():
    prop = sample_property(random.Random(1), ["string manipulation"])
    assert prop.concepts == ["string manipulation"]
    with pytest.raises(ValueError):
        sample_property(random.Random(1), [])


def test_sample_property_uniformity():
    rng = random.Random(123)
    n = 30_000
    diff_counts = {d: 0 for d in DIFFICULTIES}
    cat_counts = {c: 0 for c in CATEGORIES}
    for _ in range(n):
        p = sample_property(rng, ["c"])
        diff_counts[p.difficulty] += 1
        cat_counts[p.category] += 1
    for counts in (diff_counts, cat_counts):
        for v in counts.values():
            assert abs(v / n - 1 / 3) < 0.02


# ---- inline-test behavior --------------------------------------------------

def test_inline_test_false_leaves_instruction_unchanged(pool):
    instr = demo_instruction(pool)
    bundle = build_response_prompt(instr, pool, random.Random(8),
                                   inline_test=False)
    body = bundle.messages[1].content
    assert instr.instruction in body
    assert "assert top_k" not in body


def test_inline_test_true_appends_conforming_block(pool):
    instr = demo_instruction(pool)
    bundle = build_response_prompt(instr, pool, random.Random(9),
                                   inline_test=True)
    body = bundle.messages[1].content
    assert "assert top_k([3, 1, 2], 2) == [3, 2]" in body


def test_inline_test_ignores_nonconforming_block(pool):
    instr = demo_instruction(pool)
    instr.example_tests = "```python\nprint('not a test')\n```"
    bundle = build_response_prompt(instr, pool, random.Random(10),
                                   inline_test=True)
    assert "print('not a test')" not in bundle.messages[1].content


def test_conforming_test_block():
    good = "```python\nassert f(1) == 2\nassert f(2) == 3\n```"
    assert conforming_test_block(good) == good
    assert conforming_test_block("```python\nx = 1\n```") is None
    assert conforming_test_block("no fences here") is None


# ---- delimiter collisions --------------------------------------------------

def test_seed_containing_delimiter_rejected(pool):
    seed = simple_seed()
    seed.rendered += "\n# ### Example 5"
    with pytest.raises(DelimiterCollisionError):
        build_concepts_prompt(seed, pool, random.Random(11))


def test_pool_of_exactly_eight_uses_all(pool):
    import copy
    small = copy.copy(pool)
    small.examples = pool.examples[:8]
    bundle = build_concepts_prompt(simple_seed(), small, random.Random(12))
    assert sorted(bundle.shot_ids) == sorted(e.example_id
                                             for e in small.examples)


def test_pool_too_small_errors(pool):
    import copy
    small = copy.copy(pool)
    small.examples = pool.examples[:7]
    with pytest.raises(ValueError):
        build_concepts_prompt(simple_seed(), small, random.Random(13))
