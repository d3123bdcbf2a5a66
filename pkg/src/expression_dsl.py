"""
Expression language shared by system definitions, state functions and
user-supplied scalar maps.

An expression is built from numeric literals, the constant ``pi``, declared
variables, the operators ``+ - * / ^`` with parentheses, and calls to
``sin cos exp ln abs min max tanh sqrt``.
"""

import re
from collections.abc import Callable, Sequence

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from exceptions import SystemDefinitionError

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "ln": sympy.log,
    "abs": sympy.Abs,
    "min": sympy.Min,
    "max": sympy.Max,
    "tanh": sympy.tanh,
    "sqrt": sympy.sqrt,
}
CONSTANTS = {"pi": sympy.pi}

IDENTIFIER = re.compile(r"[A-Za-z_]\w*")
NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
ALLOWED_CHARACTERS = re.compile(r"[\w\s.+\-*/^(),]*")
TRANSFORMATIONS = standard_transformations + (convert_xor,)


def _scan_identifiers(text: str, variables: Sequence[str], line: int | None, offset: int) -> None:
    """Reject characters and names outside the grammar before sympy sees them."""
    for position, character in enumerate(text):
        if not ALLOWED_CHARACTERS.fullmatch(character):
            raise SystemDefinitionError(f"unexpected character '{character}'", line, offset + position + 1)
    power = text.find("**")
    if power >= 0:
        raise SystemDefinitionError("'**' is not an operator, use '^' for powers", line, offset + power + 1)

    position = 0
    while position < len(text):
        number = NUMBER.match(text, position)
        if number and (position == 0 or not (text[position - 1].isalnum() or text[position - 1] == "_")):
            position = number.end()
            continue
        match = IDENTIFIER.match(text, position)
        if match:
            name = match.group(0)
            if name not in variables and name not in FUNCTIONS and name not in CONSTANTS:
                raise SystemDefinitionError(f"unknown identifier '{name}'", line, offset + position + 1)
            position = match.end()
            continue
        position += 1


def parse_expression(text: str, variables: Sequence[str], line: int | None = None, offset: int = 0) -> sympy.Expr:
    """Parse one expression over the given variable names into a sympy tree.

    Args:
        text: Expression source.
        variables: Names that may appear as free symbols.
        line: Source line used in diagnostics.
        offset: Column offset of ``text`` within its line.

    Returns:
        The parsed sympy expression.
    """
    if not text.strip():
        raise SystemDefinitionError("empty expression", line, offset + 1)
    _scan_identifiers(text, variables, line, offset)

    local_dict = {name: sympy.Symbol(name, real=True) for name in variables}
    local_dict.update(FUNCTIONS)
    local_dict.update(CONSTANTS)
    try:
        expr = parse_expr(text, local_dict=local_dict, transformations=TRANSFORMATIONS, evaluate=True)
    except SyntaxError as e:
        column = e.offset if e.offset and e.offset <= len(text) else len(text)
        raise SystemDefinitionError(f"syntax error in '{text.strip()}'", line, offset + column)
    except Exception as e:
        raise SystemDefinitionError(f"invalid expression '{text.strip()}': {e}", line, offset + 1)

    if not isinstance(expr, sympy.Expr):
        raise SystemDefinitionError(f"'{text.strip()}' is not a scalar expression", line, offset + 1)
    return expr


def symbols_for(names: Sequence[str]) -> list[sympy.Symbol]:
    return [sympy.Symbol(name, real=True) for name in names]


def compile_scalar(expr: sympy.Expr, names: Sequence[str]) -> Callable[..., float]:
    """Compile for float evaluation; math errors surface as Python exceptions."""
    return sympy.lambdify(symbols_for(names), expr, modules="math")


def compile_vectorized(expr: sympy.Expr, names: Sequence[str]) -> Callable[..., np.ndarray]:
    """Compile for numpy evaluation over arrays of equal shape."""
    function = sympy.lambdify(symbols_for(names), expr, modules="numpy")

    def evaluate(*arrays: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            values = np.asarray(function(*arrays), dtype=float)
        return np.broadcast_to(values, np.shape(arrays[0])).copy() if arrays else values

    return evaluate
