"""A 40-function corpus where every curation stage removes a known subset.

Survivor bookkeeping, by design:
  40 defs -> 35 extracted (5 lack a usable double-quoted docstring)
          -> 32 after decontamination (3 contain the canary string)
          -> 28 after the return filter (4 return no value)
          -> 25 after the static checker (3 have genuine defects)
          -> 22 after docstring QC (2 scripted 'poor', 1 unparseable verdict)
          -> 20 after near-dedup (2 are near-copies of earlier survivors)
"""
from __future__ import annotations

import sys

from helpers import TranscriptBuilder

from instructforge.prompts import build_docstring_qc_prompt
from instructforge.records import SourceDocument
from instructforge.seeds.extract import extract_functions
from instructforge.seeds.filters import ExternalCheckerConfig
from instructforge.seeds.imports import ImportResolver, predict_imports
from instructforge.seeds.pipeline import CurationConfig

CANARY = "canary_benchmark_prompt_77"
BENCHMARK_STRINGS = [CANARY]

EXPECTED_SURVIVORS = [f"fn{i:02d}:0" for i in range(20)]

_SURVIVOR_TEMPLATES = [
    lambda name, i: (
        f"def {name}(x):\n"
        f'    """Multiply x by {i + 2}, add {i * 3 + 1}, and return the '
        f'result for case {i}."""\n'
        f"    scaled = x * {i + 2}\n"
        f"    return scaled + {i * 3 + 1}\n"),
    lambda name, i: (
        f"def {name}(text):\n"
        f'    """Repeat text {i + 1} times joined with dash marker '
        f'number {i}."""\n'
        f"    parts = [text] * {i + 1}\n"
        f'    return "-".join(parts)\n'),
    lambda name, i: (
        f"def {name}(items):\n"
        f'    """Keep every value above {i} from items and count them '
        f'for bucket {i}."""\n'
        f"    winners = [v for v in items if v > {i}]\n"
        f"    return len(winners)\n"),
    lambda name, i: (
        f"def {name}(mapping):\n"
        f'    """Sum the values of mapping after adding offset {i * 7} '
        f'per entry, variant {i}."""\n'
        f"    return sum(v + {i * 7} for v in mapping.values())\n"),
]


def _survivor_source(i: int) -> str:
    return _SURVIVOR_TEMPLATES[i % 4](f"fn{i:02d}", i)


def _sources() -> dict[str, str]:
    src: dict[str, str] = {}
    # fn00..fn19 pass every filter
    for i in range(20):
        src[f"fn{i:02d}"] = _survivor_source(i)

    # fn20, fn21 scripted 'poor'; fn22 gets an unparseable verdict
    for i in (20, 21, 22):
        src[f"fn{i:02d}"] = (
            f"def fn{i:02d}(value):\n"
            f'    """TODO fixme later, placeholder {i}."""\n'
            f"    return value + {i}\n")

    # fn23..fn25 fail the static checker
    src["fn23"] = (
        "def fn23(x):\n"
        '    """Delegate the work to a helper that was never defined."""\n'
        "    return undefined_helper(x) + 1\n")
    src["fn24"] = (
        "def fn24(x):\n"
        '    """Scale x via a strictly annotated inner helper."""\n'
        "    def helper(port: int) -> int:\n"
        "        return port * 2\n"
        '    return helper("8080") + x\n')
    src["fn25"] = (
        "def fn25(x):\n"
        '    """Wrap x in an array and sum it."""\n'
        "    return np.array([x]).sum()\n")

    # fn26..fn29 return no value
    src["fn26"] = (
        "def fn26(x):\n"
        '    """Print a banner for x without returning anything."""\n'
        "    print('banner', x)\n")
    src["fn27"] = (
        "def fn27(x):\n"
        '    """Bail out early with a bare return."""\n'
        "    if x:\n"
        "        return\n"
        "    print(x)\n")
    src["fn28"] = (
        "def fn28(items):\n"
        '    """Yield each item doubled; a generator returns no value."""\n'
        "    for item in items:\n"
        "        yield item * 2\n")
    src["fn29"] = (
        "def fn29(mapping):\n"
        '    """Mutate mapping in place by clearing the zero entries."""\n'
        "    for key in [k for k, v in mapping.items() if v == 0]:\n"
        "        del mapping[key]\n")

    # fn30..fn32 embed the benchmark canary string
    for i in (30, 31, 32):
        src[f"fn{i:02d}"] = (
            f"def fn{i:02d}(x):\n"
            f'    """Echo x with a tag, sample {i}."""\n'
            f'    tag = "{CANARY}"\n'
            f"    return f'{{tag}}:{{x}}'\n")

    # fn33, fn34 are near-copies of fn18, fn19 (one identifier renamed)
    src["fn33"] = _survivor_source(18).replace("fn18", "fn33")
    src["fn34"] = _survivor_source(19).replace("fn19", "fn34")

    # fn35..fn39 never make it out of extraction
    src["fn35"] = (
        "def fn35(x):\n"
        "    return x + 35\n")
    src["fn36"] = (
        "def fn36(x):\n"
        '    r"""Raw-string docstrings are excluded, pattern \\d+."""\n'
        "    return x + 36\n")
    src["fn37"] = (
        "def fn37(x):\n"
        "    '''Single-quoted docstrings are excluded.'''\n"
        "    return x + 37\n")
    src["fn38"] = (
        "class Holder:\n"
        "    def fn38(self, x):\n"
        '        """Methods are not top-level functions."""\n'
        "        return x + 38\n")
    src["fn39"] = (
        "def fn39(x):\n"
        "    x = x + 1\n"
        '    """Not a docstring: it does not lead the body."""\n'
        "    return x + 39\n")
    return src


def documents() -> list[SourceDocument]:
    return [SourceDocument(doc_id=name, path=f"{name}.py", content=content)
            for name, content in sorted(_sources().items())]


def qc_reply(seed_id: str) -> str:
    if seed_id in ("fn20:0", "fn21:0"):
        return "poor"
    if seed_id == "fn22:0":
        return "maybe"
    return "good"


def build_world(tmp_path, pool):
    """Returns (documents, CurationConfig, gateway, qc_prompt_builder)."""
    docs = documents()
    resolver = ImportResolver()
    tb = TranscriptBuilder()
    for doc in docs:
        for fn in extract_functions(doc):
            fn = predict_imports(fn, resolver)
            bundle = build_docstring_qc_prompt(fn, pool)
            tb.script(bundle.messages, 1, [qc_reply(fn.seed_id)])
    gateway = tb.gateway(tmp_path / "qc_transcript.jsonl")
    config = CurationConfig(
        benchmark_strings=list(BENCHMARK_STRINGS),
        checker=ExternalCheckerConfig(
            command=[sys.executable, "-m", "instructforge.checker"]),
        resolver=resolver)
    builder = (lambda fn: build_docstring_qc_prompt(fn, pool)
               .to_request(temperature=0.0))
    return docs, config, gateway, builder


EXPECTED_STAGE_COUNTS = {
    "extract": (35, 35, 0),
    "import_predict": (35, 35, 0),
    "decontaminate": (35, 32, 3),
    "return_filter": (32, 28, 4),
    "typecheck": (28, 25, 3),
    "docstring_quality": (25, 22, 3),
    "dedup": (22, 20, 2),
}
