"""Tiny expression language for graph charts and custom scalar fields.

An expression is a single line over the chart coordinates ``u1 .. uN`` using
``+ - * / **``, numeric literals, ``pi``, and the elementary functions
``sin cos exp log sqrt``.  It is parsed once with :mod:`ast` and evaluated on
jets, so graph surfaces get exact derivatives.
"""

from __future__ import annotations

import ast
import math

from . import jets
from .errors import ArgumentError

_FUNCS = {
    "sin": jets.jet_sin,
    "cos": jets.jet_cos,
    "exp": jets.jet_exp,
    "log": jets.jet_log,
    "sqrt": jets.jet_sqrt,
}

_CONSTS = {"pi": math.pi}


class Expression:
    def __init__(self, text: str):
        text = text.strip()
        if not text:
            raise ArgumentError("empty expression")
        try:
            self._tree = ast.parse(text, mode="eval").body
        except SyntaxError as exc:
            raise ArgumentError(f"bad expression {text!r}: {exc}") from None
        self.text = text
        self._validate(self._tree)

    def _validate(self, node: ast.AST) -> None:
        if isinstance(node, ast.BinOp) and isinstance(
            node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
        ):
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ArgumentError(f"unknown function in expression: {ast.dump(node.func)}")
            if len(node.args) != 1 or node.keywords:
                raise ArgumentError("expression functions take exactly one argument")
            self._validate(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return
            if not (node.id.startswith("u") and node.id[1:].isdigit()):
                raise ArgumentError(f"unknown name {node.id!r} (coordinates are u1..uN)")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ArgumentError("only numeric literals are allowed")
        else:
            raise ArgumentError(f"unsupported expression node {type(node).__name__}")

    def __call__(self, coords: list[jets.Jet]) -> jets.Jet:
        val = self._eval(self._tree, coords)
        if not isinstance(val, jets.Jet):
            val = jets.jet_constant(float(val), coords[0].n_vars, coords[0].order)
        return val

    def _eval(self, node: ast.AST, coords):
        if isinstance(node, ast.BinOp):
            a = self._eval(node.left, coords)
            b = self._eval(node.right, coords)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a / b
            # Pow: jet ** scalar only
            if isinstance(b, jets.Jet):
                raise ArgumentError("exponent must be a constant")
            base = a if isinstance(a, jets.Jet) else float(a)
            if isinstance(base, jets.Jet):
                return jets.jet_pow(base, float(b))
            return base ** float(b)
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, coords)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](self._as_jet(self._eval(node.args[0], coords), coords))
        if isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            idx = int(node.id[1:]) - 1
            if not (0 <= idx < len(coords)):
                raise ArgumentError(f"coordinate {node.id} out of range (chart has {len(coords)})")
            return coords[idx]
        if isinstance(node, ast.Constant):
            return float(node.value)
        raise ArgumentError("unsupported expression node")  # pragma: no cover

    @staticmethod
    def _as_jet(v, coords):
        if isinstance(v, jets.Jet):
            return v
        return jets.jet_constant(float(v), coords[0].n_vars, coords[0].order)


def load_expression(path: str) -> Expression:
    """Read an expression file: comments (#) and blank lines ignored, one
    expression expected."""
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                lines.append(line)
    if len(lines) != 1:
        raise ArgumentError(f"expression file {path!r} must contain exactly one expression")
    return Expression(lines[0])
