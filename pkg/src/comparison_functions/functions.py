import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import optimize

from exceptions import DomainError, FunctionClassError

DEFAULT_GRID_POINTS = 64
DEFAULT_GRID_LOWER = 1e-6
DEFAULT_GRID_UPPER = 1e6
MAX_BRACKET_DOUBLINGS = 2000
# exponent reported for primitives growing faster than any power
SUPERPOLYNOMIAL_TAIL = 50.0


class FunctionClass(str, Enum):
    K = "K"
    K_INF = "K_inf"
    L = "L"
    POSITIVE_DEFINITE = "positive_definite"

    @property
    def vanishes_at_origin(self) -> bool:
        return self is not FunctionClass.L


class FunctionKind(str, Enum):
    LINEAR = "linear"
    POWER = "power"
    EXP_MINUS_ONE = "exp_minus_one"
    SATURATING = "saturating"
    TABLE = "table"
    EXPRESSION = "expression"
    COMPOSITE = "composite"


class CompositeOp(str, Enum):
    SUM = "sum"
    PRODUCT = "product"
    SCALE = "scale"
    COMPOSE = "compose"
    MAX = "max"
    POWER = "power"
    SHIFT = "shift"
    INVERSE = "inverse"


def default_grid(points: int = DEFAULT_GRID_POINTS, lower: float = DEFAULT_GRID_LOWER,
                 upper: float = DEFAULT_GRID_UPPER):
    """Log-spaced sample grid with the origin prepended."""
    return np.concatenate(([0.0], np.logspace(math.log10(lower), math.log10(upper), points)))


def merge_grids(*grids) -> np.ndarray:
    """Sorted union of nonnegative sample grids."""
    parts = [np.asarray(g, dtype=float).ravel() for g in grids if g is not None]
    if not parts:
        return np.zeros(0)
    merged = np.unique(np.concatenate(parts))
    return merged[merged >= 0.0]


def _as_array(r) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(r) == 0
    values = np.asarray(r, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0.0):
        raise DomainError("comparison functions are defined on [0, inf)")
    return np.atleast_1d(values), scalar


def log_slope(grid: np.ndarray, values: np.ndarray) -> float:
    """Growth exponent of the last positive table segment in log-log scale."""
    positive = (grid > 0) & (values > 0)
    if np.count_nonzero(positive) < 2:
        return 0.0
    r = grid[positive][-2:]
    v = values[positive][-2:]
    return float(math.log(v[1] / v[0]) / math.log(r[1] / r[0]))


@dataclass(frozen=True, eq=False)
class ComparisonFunction:
    """Scalar map on [0, inf) with a declared comparison class.

    Parametric kinds keep their closed form, tables interpolate linearly
    between samples and extrapolate with ``tail_exponent`` beyond the last
    node. Composites evaluate their operands exactly.
    """

    kind: FunctionKind
    declared_class: FunctionClass
    params: tuple[float, ...] = ()
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    tail_exponent: float = 0.0
    source: str | None = None
    op: CompositeOp | None = None
    operands: tuple["ComparisonFunction", ...] = ()
    name: str = ""
    _compiled: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is FunctionKind.TABLE:
            grid = np.asarray(self.grid, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 1:
                raise ValueError("table needs matching one-dimensional grid and values")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("table grid must be strictly increasing")
            if grid[0] < 0 or np.any(~np.isfinite(values)) or np.any(values < 0):
                raise DomainError("table needs a nonnegative grid and finite nonnegative values")
            grid.setflags(write=False)
            values.setflags(write=False)
            object.__setattr__(self, "grid", grid)
            object.__setattr__(self, "values", values)
        elif self.kind is FunctionKind.EXPRESSION:
            from expression_dsl import compile_vectorized, parse_expression

            expr = parse_expression(self.source or "", ["r"])
            object.__setattr__(self, "_compiled", compile_vectorized(expr, ["r"]))
        elif self.kind is FunctionKind.POWER and self.params[1] <= 0:
            raise DomainError("power exponent must be positive")

    # constructors

    @classmethod
    def linear(cls, a: float = 1.0) -> "ComparisonFunction":
        return cls(FunctionKind.LINEAR, FunctionClass.K_INF, (float(a),))

    @classmethod
    def identity(cls) -> "ComparisonFunction":
        return cls.linear(1.0)

    @classmethod
    def power(cls, a: float, b: float) -> "ComparisonFunction":
        return cls(FunctionKind.POWER, FunctionClass.K_INF, (float(a), float(b)))

    @classmethod
    def exp_minus_one(cls, a: float = 1.0, b: float = 1.0) -> "ComparisonFunction":
        return cls(FunctionKind.EXP_MINUS_ONE, FunctionClass.K_INF, (float(a), float(b)))

    @classmethod
    def saturating(cls, a: float = 1.0) -> "ComparisonFunction":
        return cls(FunctionKind.SATURATING, FunctionClass.K, (float(a),))

    @classmethod
    def table(
        cls,
        grid,
        values,
        declared_class: FunctionClass = FunctionClass.K_INF,
        tail_exponent: float | None = None,
        name: str = "",
    ) -> "ComparisonFunction":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if tail_exponent is None:
            tail_exponent = log_slope(grid, values)
        return cls(
            FunctionKind.TABLE, declared_class, grid=grid, values=values, tail_exponent=float(tail_exponent), name=name
        )

    @classmethod
    def expression(cls, source: str, declared_class: FunctionClass = FunctionClass.K_INF) -> "ComparisonFunction":
        return cls(FunctionKind.EXPRESSION, declared_class, source=source)

    @classmethod
    def composite(
        cls, op: CompositeOp, operands, declared_class: FunctionClass, params: tuple[float, ...] = ()
    ) -> "ComparisonFunction":
        return cls(FunctionKind.COMPOSITE, declared_class, params=tuple(float(p) for p in params), op=op,
                   operands=tuple(operands))

    # algebra

    def __add__(self, other: "ComparisonFunction") -> "ComparisonFunction":
        return ComparisonFunction.composite(CompositeOp.SUM, (self, other), _join_class(self, other))

    def __mul__(self, other) -> "ComparisonFunction":
        if isinstance(other, ComparisonFunction):
            if self.declared_class is FunctionClass.L and other.declared_class is FunctionClass.L:
                declared = FunctionClass.L
            else:
                declared = _join_class(self, other)
            return ComparisonFunction.composite(CompositeOp.PRODUCT, (self, other), declared)
        return self.scaled(float(other))

    __rmul__ = __mul__

    def scaled(self, c: float) -> "ComparisonFunction":
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return ComparisonFunction.composite(CompositeOp.SCALE, (self,), self.declared_class, (c,))

    def compose(self, inner: "ComparisonFunction") -> "ComparisonFunction":
        """Return ``r -> self(inner(r))``."""
        classes = (self.declared_class, inner.declared_class)
        if classes[0] is FunctionClass.L and classes[1] in (FunctionClass.K, FunctionClass.K_INF):
            declared = FunctionClass.L
        elif FunctionClass.L in classes or FunctionClass.POSITIVE_DEFINITE in classes:
            declared = FunctionClass.POSITIVE_DEFINITE
        elif classes == (FunctionClass.K_INF, FunctionClass.K_INF):
            declared = FunctionClass.K_INF
        else:
            declared = FunctionClass.K
        return ComparisonFunction.composite(CompositeOp.COMPOSE, (self, inner), declared)

    def of_scaled_argument(self, c: float) -> "ComparisonFunction":
        """Return ``r -> self(c r)``."""
        return self.compose(ComparisonFunction.linear(c))

    def maximum(self, other: "ComparisonFunction") -> "ComparisonFunction":
        return ComparisonFunction.composite(CompositeOp.MAX, (self, other), _join_class(self, other))

    def power_of(self, p: float) -> "ComparisonFunction":
        if p <= 0:
            raise DomainError("exponent must be positive")
        return ComparisonFunction.composite(CompositeOp.POWER, (self,), self.declared_class, (p,))

    def shifted(self, c: float) -> "ComparisonFunction":
        """Return ``r -> self(r + c)``. Keeps the declared class although the value at 0 is self(c)."""
        if c < 0:
            raise DomainError("shift must be nonnegative")
        return ComparisonFunction.composite(CompositeOp.SHIFT, (self,), self.declared_class, (c,))

    def inverse(self) -> "ComparisonFunction":
        if self.declared_class is not FunctionClass.K_INF:
            raise FunctionClassError("only class K_inf functions have a global inverse")
        return ComparisonFunction.composite(CompositeOp.INVERSE, (self,), FunctionClass.K_INF)

    # evaluation

    def __call__(self, r):
        values, scalar = _as_array(r)
        out = self._evaluate(values)
        return float(out[0]) if scalar else out.reshape(np.shape(r))

    def _evaluate(self, r: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            match self.kind:
                case FunctionKind.LINEAR:
                    return self.params[0] * r
                case FunctionKind.POWER:
                    return self.params[0] * r ** self.params[1]
                case FunctionKind.EXP_MINUS_ONE:
                    return self.params[0] * np.expm1(self.params[1] * r)
                case FunctionKind.SATURATING:
                    return self.params[0] * r / (1.0 + r)
                case FunctionKind.TABLE:
                    return self._evaluate_table(r)
                case FunctionKind.EXPRESSION:
                    return self._compiled(r)
                case FunctionKind.COMPOSITE:
                    return self._evaluate_composite(r)
        raise ValueError(f"unknown kind {self.kind}")

    def _evaluate_table(self, r: np.ndarray) -> np.ndarray:
        grid, values = self.grid, self.values
        out = np.interp(r, grid, values)
        below = r < grid[0]
        if np.any(below) and self.declared_class.vanishes_at_origin:
            out[below] = values[0] * r[below] / grid[0]
        above = r > grid[-1]
        if np.any(above) and grid[-1] > 0:
            out[above] = values[-1] * (r[above] / grid[-1]) ** self.tail_exponent
        return out

    def _evaluate_composite(self, r: np.ndarray) -> np.ndarray:
        operands = self.operands
        match self.op:
            case CompositeOp.SUM:
                return operands[0]._evaluate(r) + operands[1]._evaluate(r)
            case CompositeOp.PRODUCT:
                return operands[0]._evaluate(r) * operands[1]._evaluate(r)
            case CompositeOp.SCALE:
                return self.params[0] * operands[0]._evaluate(r)
            case CompositeOp.COMPOSE:
                inner = operands[1]._evaluate(r)
                return operands[0]._evaluate(np.maximum(inner, 0.0))
            case CompositeOp.MAX:
                return np.maximum(operands[0]._evaluate(r), operands[1]._evaluate(r))
            case CompositeOp.POWER:
                return operands[0]._evaluate(r) ** self.params[0]
            case CompositeOp.SHIFT:
                return operands[0]._evaluate(r + self.params[0])
            case CompositeOp.INVERSE:
                return np.array([invert(operands[0], float(y)) for y in r])
        raise ValueError(f"unknown composite op {self.op}")

    # properties

    @property
    def is_unbounded(self) -> bool:
        if self.kind in (FunctionKind.LINEAR, FunctionKind.POWER, FunctionKind.EXP_MINUS_ONE):
            return True
        if self.kind is FunctionKind.SATURATING:
            return False
        if self.kind is FunctionKind.TABLE:
            return self.tail_exponent > 0
        return self.growth_exponent() > 0

    def growth_exponent(self, at: float = 1e6) -> float:
        """Power-law growth rate ``d log f / d log r`` far from the origin."""
        match self.kind:
            case FunctionKind.LINEAR:
                return 1.0
            case FunctionKind.POWER:
                return self.params[1]
            case FunctionKind.EXP_MINUS_ONE:
                return SUPERPOLYNOMIAL_TAIL
            case FunctionKind.SATURATING:
                return 0.0
            case FunctionKind.TABLE:
                return self.tail_exponent
        low, high = self._evaluate(np.array([at, 10.0 * at]))
        if not np.isfinite(high) or not np.isfinite(low):
            return SUPERPOLYNOMIAL_TAIL
        if low <= 0 or high <= 0:
            return 0.0 if high <= low else SUPERPOLYNOMIAL_TAIL
        return float(min(max(math.log10(high / low), -SUPERPOLYNOMIAL_TAIL), SUPERPOLYNOMIAL_TAIL))

    def with_class(self, declared_class: FunctionClass) -> "ComparisonFunction":
        return ComparisonFunction(
            self.kind, declared_class, self.params, self.grid, self.values, self.tail_exponent, self.source,
            self.op, self.operands, self.name,
        )

    def __repr__(self) -> str:
        if self.kind is FunctionKind.COMPOSITE:
            return f"{self.op.value}({', '.join(repr(o) for o in self.operands)})"
        if self.kind is FunctionKind.TABLE:
            return f"table[{self.grid.size}]"
        if self.kind is FunctionKind.EXPRESSION:
            return f"expr({self.source})"
        return f"{self.kind.value}{self.params}"


def _join_class(f: ComparisonFunction, g: ComparisonFunction) -> FunctionClass:
    classes = {f.declared_class, g.declared_class}
    if FunctionClass.POSITIVE_DEFINITE in classes or FunctionClass.L in classes:
        return FunctionClass.POSITIVE_DEFINITE
    if FunctionClass.K_INF in classes:
        return FunctionClass.K_INF
    return FunctionClass.K


def invert(f: ComparisonFunction, y: float, tol: float = 1e-9) -> float:
    """Solve ``f(r) = y`` for a class K_inf function.

    The bracket starts at [0, 1] and doubles its upper end until it
    contains the level ``y``; bisection then narrows it.

    Args:
        f: Function of declared class K_inf.
        y: Target level, nonnegative.
        tol: Accuracy target, |f(r) - y| <= tol * (1 + y).

    Returns:
        r >= 0 with f(r) ~ y.
    """
    if f.declared_class is not FunctionClass.K_INF:
        raise FunctionClassError(f"cannot invert a function of class {f.declared_class.value}")
    if y < 0 or math.isnan(y):
        raise DomainError("inverse is defined for nonnegative levels only")
    if y == 0.0:
        return 0.0

    lower, upper = 0.0, 1.0
    doublings = 0
    while f(upper) < y:
        lower, upper = upper, 2.0 * upper
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS or not math.isfinite(upper):
            raise FunctionClassError(f"level {y} is not attained; function is not unbounded")
    if f(upper) == y:
        return upper

    root = optimize.bisect(lambda r: f(r) - y, lower, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=4000)
    if abs(f(root) - y) > tol * (1.0 + y):
        # bisection stalled on a flat stretch of a table; report the best bracket end
        root = upper if abs(f(upper) - y) < abs(f(root) - y) else root
    return float(root)
