"""Tiny arithmetic grammar for coefficient and data expressions.

Allowed: numeric constants, the coordinates ``y1`` and ``y2``, the binary
operators ``+ - * /``, unary minus/plus, and ``min(...)``/``max(...)``.
Expressions compile to vectorized callables ``points (P, 2) -> (P,)``.
"""

import ast

import numpy as np

from .errors import ConfigError

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}
_CALLS = {"min": np.minimum, "max": np.maximum}


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        val = float(node.value)
        return lambda y1, y2: np.full(np.shape(y1), val)
    if isinstance(node, ast.Name):
        if node.id == "y1":
            return lambda y1, y2: y1
        if node.id == "y2":
            return lambda y1, y2: y2
        raise ConfigError(f"expression: unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left), _compile(node.right)
        return lambda y1, y2: op(left(y1, y2), right(y1, y2))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda y1, y2: -inner(y1, y2)
        return inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _CALLS and not node.keywords:
        if len(node.args) < 2:
            raise ConfigError(f"expression: {node.func.id} needs at least two arguments")
        fn = _CALLS[node.func.id]
        args = [_compile(a) for a in node.args]

        def call(y1, y2):
            out = args[0](y1, y2)
            for a in args[1:]:
                out = fn(out, a(y1, y2))
            return out

        return call
    raise ConfigError(f"expression: unsupported syntax {type(node).__name__}")


class Expression:
    """Compiled expression; call with points of shape (P, 2)."""

    def __init__(self, text):
        self.text = str(text).strip()
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError:
            raise ConfigError(f"expression: cannot parse {self.text!r}") from None
        self._fn = _compile(tree)

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        with np.errstate(divide="raise", invalid="raise"):
            try:
                return np.asarray(self._fn(points[:, 0], points[:, 1]), dtype=float)
            except FloatingPointError:
                raise ConfigError(f"expression: evaluation failed for {self.text!r}") from None

    def __repr__(self):
        return f"Expression({self.text!r})"


def as_field(value):
    """Turn a number, expression string, or callable into ``points -> values``."""
    if isinstance(value, str):
        return Expression(value)
    if callable(value):
        return value
    val = float(value)
    return lambda points: np.full(len(np.atleast_2d(points)), val)
