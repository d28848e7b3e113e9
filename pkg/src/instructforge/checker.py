"""Bundled static analyzer for the type-check gate.

A lightweight stand-in for a full type checker, exposed as the console
script `instructforge-check` so the gate still runs as a configured external
command. It reports:

- syntax errors
- unbound identifiers (names with no binding in scope)
- imports of modules that do not exist in the environment
- literal call arguments that contradict a parameter annotation on a
  function defined in the same file

Exit status 0 means zero errors; anything else fails the gate. Any other
analyzer (e.g. a real type checker) can be swapped in through config.
"""
from __future__ import annotations

import ast
import builtins
import importlib.util
import sys

_BUILTINS = frozenset(dir(builtins)) | {"__name__", "__file__", "__doc__"}

_ANNOTATION_TYPES = {
    "int": (int,),
    "float": (int, float),  # int literals are acceptable floats
    "str": (str,),
    "bool": (bool,),
    "bytes": (bytes,),
    "list": (list,),
    "dict": (dict,),
    "tuple": (tuple,),
    "set": (set,),
}


class _ModuleScope(ast.NodeVisitor):
    """Collects every binding and load in the module, flattened per scope.

    Function and class bodies are flattened into one binding set, which
    over-approximates Python scoping slightly but never reports a bound
    name as unbound.
    """

    def __init__(self) -> None:
        self.bound: set[str] = set()
        self.loads: list[ast.Name] = []
        self.imported_modules: list[tuple[str, ast.stmt]] = []

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Load):
            self.loads.append(node)
        else:
            self.bound.add(node.id)

    def _bind_args(self, args: ast.arguments) -> None:
        for a in (args.posonlyargs + args.args + args.kwonlyargs
                  + ([args.vararg] if args.vararg else [])
                  + ([args.kwarg] if args.kwarg else [])):
            self.bound.add(a.arg)

    def visit_FunctionDef(self, node) -> None:
        self.bound.add(node.name)
        self._bind_args(node.args)
        self.generic_visit(node)

    visit_AsyncFunctionDef = visit_FunctionDef

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
            self.imported_modules.append((alias.name, node))

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        if node.module and node.level == 0:
            self.imported_modules.append((node.module, node))
        for alias in node.names:
            if alias.name != "*":
                self.bound.add(alias.asname or alias.name)


def _annotation_name(ann: ast.expr | None) -> str | None:
    if isinstance(ann, ast.Name):
        return ann.id
    return None


def _check_call_literals(tree: ast.Module) -> list[str]:
    defs = {n.name: n for n in ast.walk(tree)
            if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))}
    errors = []
    for node in ast.walk(tree):
        if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)):
            continue
        fn = defs.get(node.func.id)
        if fn is None:
            continue
        params = fn.args.posonlyargs + fn.args.args
        for i, arg in enumerate(node.args):
            if i >= len(params) or not isinstance(arg, ast.Constant):
                continue
            ann = _annotation_name(params[i].annotation)
            if ann in _ANNOTATION_TYPES:
                allowed = _ANNOTATION_TYPES[ann]
                # bool is an int subclass; treat it as bool only
                value_type = bool if isinstance(arg.value, bool) else type(arg.value)
                if value_type not in allowed:
                    errors.append(
                        f"line {arg.lineno}: argument {i + 1} to {fn.name}() is "
                        f"{value_type.__name__}, annotation expects {ann}")
    return errors


def check_source(source: str) -> list[str]:
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        return [f"syntax error: {exc.msg} (line {exc.lineno})"]

    scope = _ModuleScope()
    scope.visit(tree)

    errors: list[str] = []
    for module, stmt in scope.imported_modules:
        try:
            found = importlib.util.find_spec(module.split(".")[0]) is not None
        except (ImportError, ValueError):
            found = False
        if not found:
            errors.append(f"line {stmt.lineno}: import of unknown module "
                          f"'{module}'")

    reported: set[str] = set()
    for name in scope.loads:
        if (name.id not in scope.bound and name.id not in _BUILTINS
                and name.id not in reported):
            reported.add(name.id)
            errors.append(f"line {name.lineno}: unbound identifier '{name.id}'")

    errors.extend(_check_call_literals(tree))
    return errors


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: instructforge-check <file.py>", file=sys.stderr)
        return 2
    try:
        with open(argv[0], encoding="utf-8") as f:
            source = f.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    errors = check_source(source)
    for err in errors:
        print(err)
    return 1 if errors else 0


if __name__ == "__main__":
    raise SystemExit(main())
