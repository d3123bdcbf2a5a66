from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from exceptions import DomainError, FamilyIndexError

from .functions import ComparisonFunction, FunctionClass


class KLForm(str, Enum):
    COMPOSED = "composed"  # theta1(theta2(r) * exp(-t))
    PRODUCT = "product"  # g(r) * h(t)


def _nonnegative(*arrays) -> list[np.ndarray]:
    out = [np.asarray(a, dtype=float) for a in arrays]
    for a in out:
        if np.any(np.isnan(a)) or np.any(a < 0):
            raise DomainError("arguments must be nonnegative")
    return out


@dataclass(frozen=True, eq=False)
class KLFunction:
    """Two-argument bound beta(r, t): class K in r, decaying to zero in t."""

    form: KLForm
    first: ComparisonFunction
    second: ComparisonFunction

    @classmethod
    def composed(cls, theta1: ComparisonFunction, theta2: ComparisonFunction) -> "KLFunction":
        return cls(KLForm.COMPOSED, theta1, theta2)

    @classmethod
    def product(cls, g: ComparisonFunction, h: ComparisonFunction) -> "KLFunction":
        if h.declared_class is not FunctionClass.L:
            raise DomainError("time factor of a product KL function must be class L")
        return cls(KLForm.PRODUCT, g, h)

    @classmethod
    def exponential(cls, gain: float = 1.0, rate: float = 1.0) -> "KLFunction":
        """``gain * r * exp(-rate t)`` in product form."""
        return cls.product(
            ComparisonFunction.linear(gain), ComparisonFunction.expression(f"exp(-{rate!r}*r)", FunctionClass.L)
        )

    def __call__(self, r, t):
        r, t = _nonnegative(r, t)
        scalar = r.ndim == 0 and t.ndim == 0
        r, t = np.broadcast_arrays(np.atleast_1d(r), np.atleast_1d(t))
        flat_r, flat_t = r.ravel(), t.ravel()
        if self.form is KLForm.COMPOSED:
            out = self.first(self.second(flat_r) * np.exp(-flat_t))
        else:
            out = self.first(flat_r) * self.second(flat_t)
        return float(out[0]) if scalar else out.reshape(r.shape)

    @property
    def theta1(self) -> ComparisonFunction:
        return self.first

    @property
    def theta2(self) -> ComparisonFunction:
        return self.second


@dataclass(frozen=True, eq=False)
class TwoArgFunction:
    """Map (s, r) -> value that is class K in each argument.

    ``index_limit`` bounds the first argument when the function was built
    by interpolating an indexed family.
    """

    function: Callable[[np.ndarray, np.ndarray], np.ndarray]
    index_limit: float = np.inf
    name: str = ""

    @classmethod
    def from_expression(cls, source: str) -> "TwoArgFunction":
        from expression_dsl import compile_vectorized, parse_expression

        compiled = compile_vectorized(parse_expression(source, ["s", "r"]), ["s", "r"])
        return cls(compiled, name=source)

    def __call__(self, s, r):
        s, r = _nonnegative(s, r)
        scalar = s.ndim == 0 and r.ndim == 0
        s, r = np.broadcast_arrays(np.atleast_1d(s), np.atleast_1d(r))
        if np.any(s > self.index_limit):
            raise FamilyIndexError(f"first argument exceeds the family size {self.index_limit:g}")
        out = np.asarray(self.function(s, r), dtype=float)
        return float(out.ravel()[0]) if scalar else out

    def diagonal(self, x: np.ndarray) -> np.ndarray:
        """g(min(x, limit), x); the index argument saturates at the family size."""
        x = np.asarray(x, dtype=float)
        return self(np.minimum(x, self.index_limit), x)


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    """Functions indexed by M = 1..len(family)."""

    members: tuple = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        kinds = {type(m) for m in members}
        if len(kinds) > 1 or not kinds <= {ComparisonFunction, KLFunction}:
            raise TypeError("a family holds either ComparisonFunctions or KLFunctions")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_callable(cls, factory: Callable[[int], object], size: int) -> "FunctionFamily":
        return cls(tuple(factory(m) for m in range(1, size + 1)))

    @classmethod
    def constant(cls, member, size: int) -> "FunctionFamily":
        return cls((member,) * size)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def member(self, index: int):
        """Member with 1-based index ``index``."""
        if not 1 <= index <= len(self.members):
            raise FamilyIndexError(f"index {index} outside 1..{len(self.members)}")
        return self.members[index - 1]

    @property
    def holds_kl(self) -> bool:
        return bool(self.members) and isinstance(self.members[0], KLFunction)
