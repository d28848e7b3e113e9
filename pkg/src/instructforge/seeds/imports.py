"""Import prediction for unbound identifiers in extracted functions.

Naive extraction loses module-level imports, so we re-infer them: find the
free identifiers of the function and look each one up in a symbol table
(stdlib module names plus a configurable module map). Identifiers we cannot
resolve are left alone; the type-check gate removes those functions later.
"""
from __future__ import annotations

import ast
import builtins
import sys
from dataclasses import dataclass, field

from ..records import SeedFunction

_BUILTINS = frozenset(dir(builtins)) | {"__name__", "__file__", "__doc__"}


@dataclass
class ImportResolver:
    """Maps a free identifier to the import statement that would bind it."""

    extra_modules: dict[str, str] = field(default_factory=dict)
    include_stdlib: bool = True

    def resolve(self, name: str) -> str | None:
        if name in self.extra_modules:
            return self.extra_modules[name]
        if self.include_stdlib and name in sys.stdlib_module_names:
            return f"import {name}"
        return None


class _FreeNameCollector(ast.NodeVisitor):
    """Collects loaded and bound names across the whole function subtree.

    Scoping is flattened: a name bound anywhere in the function (including
    nested defs and comprehensions) counts as bound. That over-approximates
    binding, which only risks missing an import, never inventing one.
    """

    def __init__(self) -> None:
        self.loaded: list[str] = []
        self.bound: set[str] = set()

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Load):
            self.loaded.append(node.id)
        else:
            self.bound.add(node.id)
        self.generic_visit(node)

    def _bind_args(self, args: ast.arguments) -> None:
        for a in (args.posonlyargs + args.args + args.kwonlyargs
                  + ([args.vararg] if args.vararg else [])
                  + ([args.kwarg] if args.kwarg else [])):
            self.bound.add(a.arg)

    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        self.bound.add(node.name)
        self._bind_args(node.args)
        self.generic_visit(node)

    visit_AsyncFunctionDef = visit_FunctionDef  # type: ignore[assignment]

    def visit_Lambda(self, node: ast.Lambda) -> None:
        self._bind_args(node.args)
        self.generic_visit(node)

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        self.bound.add(node.name)
        self.generic_visit(node)

    def visit_ExceptHandler(self, node: ast.ExceptHandler) -> None:
        if node.name:
            self.bound.add(node.name)
        self.generic_visit(node)

    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            self.bound.add((alias.asname or alias.name).split(".")[0])

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        for alias in node.names:
            self.bound.add(alias.asname or alias.name)


def free_identifiers(fn: SeedFunction) -> list[str]:
    """Free names of the rendered function, in first-use order."""
    try:
        tree = ast.parse(fn.rendered)
    except SyntaxError:
        return []
    collector = _FreeNameCollector()
    collector.visit(tree)
    seen: set[str] = set()
    out: list[str] = []
    for name in collector.loaded:
        if name in collector.bound or name in _BUILTINS or name in seen:
            continue
        seen.add(name)
        out.append(name)
    return out


def predict_imports(fn: SeedFunction, resolver: ImportResolver) -> SeedFunction:
    """Extend fn.imports with statements for every resolvable free identifier."""
    additions = []
    for name in free_identifiers(fn):
        stmt = resolver.resolve(name)
        if stmt is not None and stmt not in fn.imports and stmt not in additions:
            additions.append(stmt)
    if not additions:
        return fn
    old_prefix = "\n".join(fn.imports) + "\n\n" if fn.imports else ""
    if not fn.rendered.startswith(old_prefix):
        raise ValueError(f"rendered text of {fn.seed_id} lost its import prefix")
    fn_source = fn.rendered[len(old_prefix):]
    imports = fn.imports + sorted(additions)
    return SeedFunction(
        seed_id=fn.seed_id, imports=imports, signature=fn.signature,
        docstring=fn.docstring, body=fn.body,
        rendered="\n".join(imports) + "\n\n" + fn_source,
        origin=fn.origin)
