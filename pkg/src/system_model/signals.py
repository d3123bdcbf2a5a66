import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

from comparison_functions import ComparisonFunction
from exceptions import DomainError

# values within this relative margin of the saturation radius are left untouched
SATURATION_SLACK = 4 * np.finfo(float).eps
# breakpoints closer than this (relative to max(1, |t|)) are the same instant
EDGE_TOLERANCE = 1e-12


def _edge_slack(t: float) -> float:
    return EDGE_TOLERANCE * max(1.0, abs(t))


class InputSignalRecord(BaseModel):
    breakpoints: list[float]
    values: list[list[float]]


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Piecewise-constant signal: ``values[i]`` holds on [breakpoints[i], breakpoints[i+1]).

    The last value extends to infinity.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breakpoints = np.array(self.breakpoints, dtype=float).ravel()
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(breakpoints.size, -1)
        if breakpoints.size == 0 or values.ndim != 2 or values.shape[0] != breakpoints.size:
            raise ValueError("one value row is needed per breakpoint")
        if breakpoints[0] != 0.0:
            raise ValueError("the first breakpoint must be 0")
        if np.any(np.diff(breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(breakpoints)) and np.all(np.isfinite(values))):
            raise ValueError("signal must be finite")
        breakpoints.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value) -> "InputSignal":
        return cls(np.zeros(1), np.atleast_1d(np.asarray(value, dtype=float))[None, :])

    @classmethod
    def zero(cls, dimension: int) -> "InputSignal":
        return cls(np.zeros(1), np.zeros((1, dimension)))

    @classmethod
    def from_rows(cls, rows) -> "InputSignal":
        """Build from rows ``(t, v1, ..., vm)``."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return cls(rows[:, 0], rows[:, 1:])

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1) if self.dimension else np.zeros(self.breakpoints.size)

    def value_at(self, t):
        """Right-continuous value at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        index = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0, None)
        return self.values[index]

    def segments(self, horizon: float):
        """(start, end, value) pieces covering [0, horizon]."""
        edges = np.append(self.breakpoints[self.breakpoints < horizon], horizon)
        for i in range(edges.size - 1):
            yield float(edges[i]), float(edges[i + 1]), self.values[i]

    def sup_norm(self, t: float | None = None) -> float:
        """Essential sup of |u| over [0, t], or over [0, inf) when t is None."""
        if t is None:
            return float(np.max(self.norms))
        return float(self.running_sup(np.array([t]))[0])

    def running_sup(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        # a segment counts once it has positive length inside [0, t]
        active = np.clip(np.searchsorted(self.breakpoints, times, side="left") - 1, 0, None)
        return np.maximum.accumulate(self.norms)[active]

    def integral(self, sigma: ComparisonFunction, t: float) -> float:
        """Exact integral of sigma(|u(s)|) over [0, t]."""
        return float(self.running_integral(sigma, np.array([t]))[0])

    def running_integral(self, sigma: ComparisonFunction, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        rates = sigma(self.norms)
        cumulative = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(self.breakpoints))))
        index = np.clip(np.searchsorted(self.breakpoints, times, side="right") - 1, 0, None)
        return cumulative[index] + rates[index] * (times - self.breakpoints[index])

    def saturate(self, bound: float) -> "InputSignal":
        """Radial projection of every value into the ball of radius ``bound``."""
        if bound <= 0:
            raise DomainError("saturation bound must be positive")
        norms = self.norms
        with np.errstate(divide="ignore"):
            factors = np.where(norms <= bound * (1.0 + SATURATION_SLACK), 1.0, bound / norms)
        return InputSignal(self.breakpoints, self.values * factors[:, None])

    def concat(self, other: "InputSignal", switch_time: float) -> "InputSignal":
        """This signal on [0, switch_time), ``other`` shifted by switch_time afterwards."""
        if switch_time < 0:
            raise DomainError("switch time must be nonnegative")
        if other.dimension != self.dimension:
            raise ValueError("signals have different dimensions")
        if switch_time == 0.0:
            return other
        keep = self.breakpoints < switch_time - _edge_slack(switch_time)
        return InputSignal(
            np.concatenate((self.breakpoints[keep], switch_time + other.breakpoints)),
            np.vstack((self.values[keep], other.values)),
        )

    def shift(self, offset: float) -> "InputSignal":
        """The signal t -> u(t + offset)."""
        if offset < 0:
            raise DomainError("shift must be nonnegative")
        # a breakpoint within rounding of the offset starts the shifted signal
        cut = offset + _edge_slack(offset)
        later = self.breakpoints > cut
        return InputSignal(
            np.concatenate(([0.0], self.breakpoints[later] - offset)),
            np.vstack((self.value_at(cut)[None, :], self.values[later])),
        )

    def same_on(self, other: "InputSignal", horizon: float, atol: float = 1e-12) -> bool:
        """Equality almost everywhere on [0, horizon], checked inside every piece of either signal."""
        sample_times = piece_midpoints(self, other, horizon)
        return bool(np.allclose(self.value_at(sample_times), other.value_at(sample_times), rtol=0.0, atol=atol))

    def to_record(self) -> InputSignalRecord:
        return InputSignalRecord(breakpoints=[float(t) for t in self.breakpoints],
                                 values=[[float(v) for v in row] for row in self.values])

    @classmethod
    def from_record(cls, record: InputSignalRecord) -> "InputSignal":
        values = np.asarray(record.values, dtype=float).reshape(len(record.breakpoints), -1)
        return cls(np.asarray(record.breakpoints, dtype=float), values)


def piece_midpoints(first: InputSignal, second: InputSignal, horizon: float) -> np.ndarray:
    """Midpoints of the pieces cut by both signals' breakpoints, edges within rounding merged."""
    edges = np.unique(np.concatenate((first.breakpoints, second.breakpoints, [horizon])))
    edges = edges[edges <= horizon]
    if edges.size < 2:
        return edges
    slack = EDGE_TOLERANCE * np.maximum(1.0, np.abs(edges[1:]))
    edges = np.concatenate((edges[:1], edges[1:][np.diff(edges) > slack]))
    if edges[-1] < horizon - _edge_slack(horizon):
        edges = np.append(edges, horizon)
    return 0.5 * (edges[:-1] + edges[1:]) if edges.size > 1 else edges


def piecewise_uniform(rng: np.random.Generator, dimension: int, bound: float, horizon: float,
                      segments: int) -> InputSignal:
    """Random signal with ``segments`` equal pieces on [0, horizon], each value uniform in the ball."""
    breakpoints = np.linspace(0.0, horizon, segments + 1)[:-1]
    return InputSignal(breakpoints, ball_samples(rng, segments, dimension, bound))


def ball_samples(rng: np.random.Generator, count: int, dimension: int, radius: float) -> np.ndarray:
    """Points drawn uniformly from the closed ball of ``radius`` in R^dimension."""
    if dimension == 0:
        return np.zeros((count, 0))
    directions = rng.standard_normal((count, dimension))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    directions = np.divide(directions, norms, out=np.zeros_like(directions), where=norms > 0)
    radii = radius * rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / dimension)
    return directions * radii


def exact_integral(values: np.ndarray, breakpoints: np.ndarray, sigma: ComparisonFunction, t: float) -> float:
    """Sum of sigma(|v_i|) dt_i computed with math.fsum, for cross-checks."""
    edges = np.append(breakpoints[breakpoints < t], t)
    norms = np.linalg.norm(np.atleast_2d(values), axis=1)
    return math.fsum(float(sigma(norms[i])) * float(edges[i + 1] - edges[i]) for i in range(edges.size - 1))
