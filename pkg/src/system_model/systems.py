import logging
import re
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
import sympy

from comparison_functions import ComparisonFunction
from exceptions import DomainError, SystemDefinitionError
from expression_dsl import compile_scalar, parse_expression

ORIGIN_TOLERANCE = 1e-12
NORM_SLACK = 1e-12

HEADER = re.compile(r"^\s*n\s*=\s*(\d+)\s*[, ]\s*m\s*=\s*(\d+)\s*$")
EQUATION = re.compile(r"^\s*dx(\d+)\s*=(.*)$")
INPUT_NAME = re.compile(r"\bu(\d+)\b")

# failures of the float-level evaluation of a vector field
EVALUATION_ERRORS = (ArithmeticError, ValueError, TypeError)


class InputSystem(Protocol):
    state_dimension: int
    input_dimension: int

    def vector_field(self, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...


def state_names(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def input_names(m: int) -> list[str]:
    return [f"u{i}" for i in range(1, m + 1)]


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """Vector field x' = f(x, u) given by one expression per state."""

    state_dimension: int
    input_dimension: int
    expressions: tuple[sympy.Expr, ...]
    source: str = ""
    origin_residual: float = field(default=0.0, init=False)
    _field: Any = field(default=None, init=False, repr=False)

    def __post_init__(self):
        names = state_names(self.state_dimension) + input_names(self.input_dimension)
        object.__setattr__(self, "_field", compile_scalar(list(self.expressions), names))
        try:
            residual = float(np.max(np.abs(self.vector_field(np.zeros(self.state_dimension),
                                                             np.zeros(self.input_dimension))), initial=0.0))
        except EVALUATION_ERRORS as e:
            logging.warning(f"Vector field cannot be evaluated at the origin: {e}")
            residual = float("nan")
        object.__setattr__(self, "origin_residual", residual)
        if not residual <= ORIGIN_TOLERANCE:
            logging.warning(f"f(0, 0) != 0 (residual {residual:.3e}); the origin is not an equilibrium")

    def vector_field(self, x, u) -> np.ndarray:
        """Evaluate f at floats; math errors propagate as exceptions."""
        arguments = [float(v) for v in x] + [float(v) for v in u]
        return np.array(self._field(*arguments), dtype=float).ravel()


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """x' = f(x, d * phi(|x|)) driven by d with |d| <= 1."""

    base: ControlSystem
    phi: ComparisonFunction

    @property
    def state_dimension(self) -> int:
        return self.base.state_dimension

    @property
    def input_dimension(self) -> int:
        return self.base.input_dimension

    def vector_field(self, x, d) -> np.ndarray:
        gain = self.phi(float(np.linalg.norm(x)))
        return self.base.vector_field(x, np.asarray(d, dtype=float) * gain)


@dataclass(frozen=True, eq=False)
class SaturatedSystem:
    """x' = f(x, sat_M(u)) with sat_M the radial projection onto the ball of radius M."""

    base: ControlSystem
    bound: float

    @property
    def state_dimension(self) -> int:
        return self.base.state_dimension

    @property
    def input_dimension(self) -> int:
        return self.base.input_dimension

    def vector_field(self, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        norm = float(np.linalg.norm(u))
        if norm > self.bound:
            u = u * (self.bound / norm)
        return self.base.vector_field(x, u)


def _statements(source: str):
    """Yield (line, column offset, text) for every ';' or newline separated statement."""
    for line_number, line in enumerate(source.splitlines(), start=1):
        line = line.split("#", 1)[0]
        offset = 0
        for part in line.split(";"):
            if part.strip():
                yield line_number, offset, part
            offset += len(part) + 1


def parse_system(source: str) -> ControlSystem:
    """Parse a system definition.

    The optional header ``n=<int> m=<int>`` is followed by one
    ``dx<i> = <expr>`` statement per state; statements are separated by
    newlines or ``;``. Without a header n is the number of equations and m
    the largest input index referenced.
    """
    declared: tuple[int, int] | None = None
    equations: dict[int, tuple[int, int, str]] = {}

    for line, offset, text in _statements(source):
        header = HEADER.match(text)
        if header:
            if declared is not None or equations:
                raise SystemDefinitionError("header must come first", line, offset + 1)
            declared = (int(header.group(1)), int(header.group(2)))
            continue
        equation = EQUATION.match(text)
        if not equation:
            raise SystemDefinitionError(f"expected 'dx<i> = <expr>', got '{text.strip()}'", line, offset + 1)
        index = int(equation.group(1))
        if index in equations:
            raise SystemDefinitionError(f"dx{index} defined twice", line, offset + 1)
        equations[index] = (line, offset + equation.start(2), equation.group(2))

    if not equations:
        raise SystemDefinitionError("no equations found")
    if declared is None:
        n = len(equations)
        referenced = [int(i) for _, _, text in equations.values() for i in INPUT_NAME.findall(text)]
        m = max(referenced, default=0)
    else:
        n, m = declared
    if n < 1:
        raise SystemDefinitionError("state dimension must be at least 1")
    if sorted(equations) != list(range(1, n + 1)):
        raise SystemDefinitionError(
            f"dimension mismatch: n={n} needs dx1..dx{n}, found {', '.join(f'dx{i}' for i in sorted(equations))}"
        )

    names = state_names(n) + input_names(m)
    expressions = tuple(parse_expression(text, names, line, offset) for line, offset, text in
                        (equations[i] for i in range(1, n + 1)))
    logging.debug(f"Parsed system with n={n}, m={m}")
    return ControlSystem(n, m, expressions, source)


def close_loop(system: ControlSystem, phi: ComparisonFunction, d) -> ClosedLoopSystem:
    """Feedback x' = f(x, d phi(|x|)); ``d`` must stay in the closed unit ball."""
    norm = d.sup_norm() if hasattr(d, "sup_norm") else float(np.linalg.norm(d))
    if norm > 1.0 + NORM_SLACK:
        raise DomainError(f"disturbance must satisfy ||d|| <= 1, got {norm:g}")
    return ClosedLoopSystem(system, phi)


def saturated_system(system: ControlSystem, bound: float) -> SaturatedSystem:
    if bound <= 0:
        raise DomainError("saturation bound must be positive")
    return SaturatedSystem(system, bound)


@dataclass(frozen=True, eq=False)
class StateFunction:
    """Scalar function V(x) over x1..xn, with exact and finite-difference gradients."""

    expression: sympy.Expr
    state_dimension: int
    source: str = ""
    _value: Any = field(default=None, init=False, repr=False)
    _gradient: Any = field(default=None, init=False, repr=False)

    def __post_init__(self):
        names = state_names(self.state_dimension)
        symbols = [sympy.Symbol(name, real=True) for name in names]
        gradient = [sympy.diff(self.expression, s) for s in symbols]
        object.__setattr__(self, "_value", compile_scalar(self.expression, names))
        object.__setattr__(self, "_gradient", compile_scalar(gradient, names))

    @classmethod
    def parse(cls, source: str, state_dimension: int) -> "StateFunction":
        return cls(parse_expression(source, state_names(state_dimension)), state_dimension, source)

    def __call__(self, x) -> float:
        return float(self._value(*[float(v) for v in x]))

    def gradient(self, x) -> np.ndarray:
        return np.array(self._gradient(*[float(v) for v in x]), dtype=float).ravel()

    def finite_difference_gradient(self, x) -> np.ndarray:
        """Central differences with step 1e-6 (1 + |x|)."""
        x = np.asarray(x, dtype=float)
        step = 1e-6 * (1.0 + float(np.linalg.norm(x)))
        out = np.empty(x.size)
        for i in range(x.size):
            offset = np.zeros(x.size)
            offset[i] = step
            out[i] = (self(x + offset) - self(x - offset)) / (2.0 * step)
        return out
