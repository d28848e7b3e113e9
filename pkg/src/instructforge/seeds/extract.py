"""Top-level function extraction from raw source documents.

Only module-level function definitions whose first body statement is a plain
string literal delimited by triple double-quotes become seeds. Nested and
method-level functions never match, and `'''` docstrings are excluded on
purpose: the delimiter itself is part of the match.
"""
from __future__ import annotations

import ast
import logging

from ..records import SeedFunction, SourceDocument

logger = logging.getLogger(__name__)


def _module_imports(tree: ast.Module, lines: list[str]) -> list[tuple[set[str], str]]:
    """(bound names, source text) for each module-level import statement."""
    out = []
    for node in tree.body:
        if isinstance(node, ast.Import):
            bound = {(a.asname or a.name).split(".")[0] for a in node.names}
        elif isinstance(node, ast.ImportFrom):
            bound = {(a.asname or a.name) for a in node.names if a.name != "*"}
        else:
            continue
        text = "\n".join(lines[node.lineno - 1:node.end_lineno])
        out.append((bound, text))
    return out


def _is_triple_dquote(source: str, node: ast.Constant) -> bool:
    seg = ast.get_source_segment(source, node)
    if seg is None:
        return False
    return seg.startswith('"""') and seg.endswith('"""') and len(seg) >= 6


def extract_functions(doc: SourceDocument) -> list[SeedFunction]:
    """Extract docstringed top-level functions; unparseable input yields []."""
    try:
        tree = ast.parse(doc.content)
    except (SyntaxError, ValueError) as exc:
        logger.debug("skipping unparseable document %s: %s", doc.doc_id, exc)
        return []

    lines = doc.content.splitlines()
    imports = _module_imports(tree, lines)
    seeds: list[SeedFunction] = []
    for idx, node in enumerate(tree.body):
        if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue
        if not node.body:
            continue
        first = node.body[0]
        if not (isinstance(first, ast.Expr)
                and isinstance(first.value, ast.Constant)
                and isinstance(first.value.value, str)):
            continue
        if not _is_triple_dquote(doc.content, first.value):
            continue

        start = node.lineno
        if node.decorator_list:
            start = min(d.lineno for d in node.decorator_list)
        signature = "\n".join(lines[start - 1:first.lineno - 1])
        docstring_block = "\n".join(lines[first.lineno - 1:first.end_lineno])
        body = "\n".join(lines[first.end_lineno:node.end_lineno])

        seg = ast.get_source_segment(doc.content, first.value) or ""
        docstring = seg[3:-3]

        # carry over the module imports the function actually uses; imports
        # the file never had are inferred later by import prediction
        free = _free_names(node)
        fn_imports = [text for bound, text in imports if bound & free]

        seed = SeedFunction.from_parts(
            seed_id=f"{doc.doc_id}:{idx}",
            imports=fn_imports,
            signature=signature,
            docstring_block=docstring_block,
            docstring=docstring,
            body=body,
            origin={"doc_id": doc.doc_id,
                    "byte_range": [_line_offset(doc.content, start),
                                   _line_offset(doc.content, node.end_lineno + 1)]},
        )
        seeds.append(seed)
    return seeds


def _free_names(node: ast.AST) -> set[str]:
    from .imports import _FreeNameCollector

    collector = _FreeNameCollector()
    collector.visit(node)
    return {n for n in collector.loaded if n not in collector.bound}


def _line_offset(content: str, lineno: int) -> int:
    """Byte offset of the start of 1-based line `lineno` (UTF-8)."""
    offset = 0
    for i, line in enumerate(content.splitlines(keepends=True), start=1):
        if i >= lineno:
            break
        offset += len(line.encode("utf-8"))
    return offset
