"""Tiny arithmetic expression language for parametric surface files.

Grammar (a subset of Python expression syntax)::

    expr   := expr ('+' | '-' | '*' | '/' | '**') expr
            | ('+' | '-') expr
            | NAME '(' expr ')'
            | NAME | NUMBER | '(' expr ')'

Functions: sin, cos, tan, exp, log, sqrt, sinh, cosh, tanh, arctan.
Names resolve to surface variables, user constants, or ``pi`` and ``e``.
Only complex-analytic operations are offered, so compiled expressions can be
differentiated by complex step.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "arctan": np.arctan,
}

CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class ExpressionError(ValueError):
    pass


def compile_expression(text: str, variables, constants=None):
    """Compile ``text`` into ``f(env)`` where ``env`` maps variable names to arrays."""
    variables = tuple(variables)
    consts = dict(CONSTANTS)
    consts.update(constants or {})
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as err:
        raise ExpressionError(f"cannot parse {text!r}: {err.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda env: value
        if isinstance(node, ast.Name):
            name = node.id
            if name in variables:
                return lambda env: env[name]
            if name in consts:
                value = float(consts[name])
                return lambda env: value
            raise ExpressionError(f"unknown name {name!r} in {text!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            op = _UNOPS[type(node.op)]
            arg = build(node.operand)
            return lambda env: op(arg(env))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function {node.func.id!r} in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            fn = FUNCTIONS[node.func.id]
            arg = build(node.args[0])
            return lambda env: fn(arg(env))
        raise ExpressionError(f"unsupported syntax {ast.dump(node)!s} in {text!r}")

    return build(tree)
