"""Closed-form scalar fields of ``(x, y)`` and their exact third-order jets."""

from __future__ import annotations

import ast
import math
from typing import NamedTuple

import numpy as np

from . import jets
from .errors import SingularPoint
from .jets import Jet, Jet3

FUNCTIONS = {
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
    "sin": jets.sin,
    "cos": jets.cos,
    "tan": jets.tan,
    "arctan": jets.arctan,
    "atan": jets.arctan,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


class Point2(NamedTuple):
    x: float
    y: float


def point(x, y) -> Point2:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point ({x}, {y}) is not finite")
    return Point2(float(x), float(y))


class ScalarExpr:
    """Expression tree over ``x``, ``y``, numeric constants and elementary functions.

    Parsed from Python-like source (``^`` is accepted for powers).  Only the
    node types listed in :data:`FUNCTIONS`, :data:`CONSTANTS` and the four
    arithmetic operators plus powers are allowed; anything else is rejected at
    construction time.

    >>> ScalarExpr("log(cos(y)) - log(cos(x))")
    ScalarExpr('log(cos(y)) - log(cos(x))')
    """

    def __init__(self, source: str, variables=("x", "y")):
        self.source = source.strip().replace("^", "**")
        self.variables = tuple(variables)
        self.tree = ast.parse(self.source, mode="eval").body
        self._check(self.tree)

    def __repr__(self):
        return f"ScalarExpr({self.source!r})"

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValueError(f"operator {type(node.op).__name__} not supported")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ValueError("only unary + and - are supported")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ValueError(f"unknown function in {ast.unparse(node)!r}")
            if len(node.args) != 1 or node.keywords:
                raise ValueError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in CONSTANTS:
                raise ValueError(f"unknown name {node.id!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ValueError(f"constant {node.value!r} is not a real number")
        else:
            raise ValueError(f"unsupported syntax: {ast.unparse(node)!r}")

    def substitute(self, **replacements: str) -> ScalarExpr:
        """Replace free variables by sub-expressions, e.g. ``u="x + y"``."""
        trees = {k: ast.parse(v, mode="eval").body for k, v in replacements.items()}

        class _Sub(ast.NodeTransformer):
            def visit_Name(self, node):
                return trees.get(node.id, node)

        body = _Sub().visit(ast.parse(self.source, mode="eval")).body
        return ScalarExpr(ast.unparse(body))

    def evaluate(self, **values):
        """Evaluate with variables bound to numbers, arrays or :class:`Jet` objects."""
        return self._eval(self.tree, values)

    __call__ = evaluate

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](self._eval(node.args[0], env))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return CONSTANTS[node.id]
        return float(node.value)


def taylor(expr: ScalarExpr, x, y, order: int = jets.MAX_ORDER) -> Jet:
    """Jet of ``expr`` about every point of the (broadcast) arrays ``x``, ``y``."""
    X, Y = Jet.coordinates(x, y, order)
    out = expr.evaluate(x=X, y=Y)
    if not isinstance(out, Jet):
        out = Jet.constant(np.broadcast_to(out, X.shape), order)
    return out


def jet_eval(expr: ScalarExpr | str, x, y=None, *, strict: bool = True) -> Jet3:
    """Exact value and derivatives through order 3 of ``expr``.

    ``x`` may be a :class:`Point2` (with ``y`` omitted) or coordinates/arrays.
    With ``strict`` a :class:`SingularPoint` is raised if any point hits a
    singularity; otherwise those points carry NaN entries.
    """
    if isinstance(expr, str):
        expr = ScalarExpr(expr)
    if y is None:
        x, y = x
    with np.errstate(all="ignore"):
        j3 = Jet3.from_taylor(taylor(expr, x, y))
    if strict:
        ok = j3.finite()
        if not np.all(ok):
            bad = np.argwhere(~np.atleast_1d(ok)).ravel()
            raise SingularPoint(f"{expr.source} is singular at {bad.size} point(s)", points=bad)
    return j3
