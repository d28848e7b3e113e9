"""Per-function filter stages: return filtering, decontamination,
type-checking, and docstring-quality classification."""
from __future__ import annotations

import ast
import logging
import os
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..records import SeedFunction

logger = logging.getLogger(__name__)


class CheckerUnavailableError(RuntimeError):
    """The configured external analyzer could not be executed."""


class GatewayExhaustedError(RuntimeError):
    """The inference backend kept failing after retries."""


def has_value_return(fn: SeedFunction) -> bool:
    try:
        tree = ast.parse(fn.rendered)
    except SyntaxError:
        return False
    return any(isinstance(n, ast.Return) and n.value is not None
               for n in ast.walk(tree))


def filter_returns(fns: list[SeedFunction]) -> list[SeedFunction]:
    """Keep functions containing at least one return statement with a value."""
    return [fn for fn in fns if has_value_return(fn)]


def decontaminate(fns: list[SeedFunction],
                  benchmark_strings: list[str]) -> list[SeedFunction]:
    """Drop functions containing any benchmark string as an exact substring."""
    strings = [s for s in benchmark_strings if s]
    return [fn for fn in fns
            if not any(s in fn.rendered for s in strings)]


@dataclass
class ExternalCheckerConfig:
    """Command invoked per function; exit status 0 means the check passed."""

    command: list[str]
    timeout_s: float = 60.0
    max_workers: int = 8


def _check_one(fn: SeedFunction, checker: ExternalCheckerConfig) -> bool:
    with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as tmp:
        tmp.write(fn.rendered + "\n")
        path = tmp.name
    try:
        try:
            proc = subprocess.run(checker.command + [path],
                                  capture_output=True, text=True,
                                  timeout=checker.timeout_s)
        except FileNotFoundError as exc:
            raise CheckerUnavailableError(
                f"analyzer command not found: {checker.command[0]}") from exc
        except subprocess.TimeoutExpired:
            return False
        return proc.returncode == 0
    finally:
        os.unlink(path)


def typecheck_filter(fns: list[SeedFunction],
                     checker: ExternalCheckerConfig) -> list[SeedFunction]:
    """Keep functions the external analyzer accepts with zero errors.

    The gate is mandatory: an unavailable analyzer aborts the stage instead
    of silently passing everything through.
    """
    if not fns:
        return []
    if checker.max_workers > 1:
        with ThreadPoolExecutor(max_workers=checker.max_workers) as pool:
            verdicts = list(pool.map(lambda fn: _check_one(fn, checker), fns))
    else:
        verdicts = [_check_one(fn, checker) for fn in fns]
    return [fn for fn, ok in zip(fns, verdicts) if ok]


@dataclass
class DocstringFilterResult:
    kept: list[SeedFunction]
    removal_reasons: dict[str, int] = field(default_factory=dict)


def parse_quality_verdict(text: str) -> str | None:
    """First token of the reply, case-insensitive: 'good' or 'poor'."""
    tokens = text.strip().split()
    if not tokens:
        return None
    first = tokens[0].strip(".,:;!\"'").lower()
    if first in ("good", "poor"):
        return first
    return None


def docstring_quality_filter(fns: list[SeedFunction], gateway,
                             prompt_builder) -> DocstringFilterResult:
    """Classify each docstring via the gateway, keep only 'good' verdicts.

    `prompt_builder(fn)` returns the GenerationRequest for one function.
    Unparseable verdicts remove the function (reason 'unparseable-verdict');
    transport failures after retries also remove it, with the reason logged
    rather than the function being silently kept.
    """
    kept: list[SeedFunction] = []
    reasons: dict[str, int] = {}
    for fn in fns:
        try:
            result = gateway.generate(prompt_builder(fn))
            text = result.samples[0]["text"]
        except Exception as exc:  # noqa: BLE001 - any backend failure counts
            logger.warning("docstring check skipped for %s: %s", fn.seed_id, exc)
            reasons["backend-failure"] = reasons.get("backend-failure", 0) + 1
            continue
        verdict = parse_quality_verdict(text)
        if verdict == "good":
            kept.append(fn)
        elif verdict == "poor":
            reasons["poor-docstring"] = reasons.get("poor-docstring", 0) + 1
        else:
            reasons["unparseable-verdict"] = reasons.get("unparseable-verdict", 0) + 1
    return DocstringFilterResult(kept=kept, removal_reasons=reasons)
