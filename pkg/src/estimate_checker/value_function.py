"""
Sampled lower bounds of the value function

    V(xi) = sup over t >= 0 and inputs u of alpha(|x(t, xi, u)|) - int_0^t sigma1(|u|)

and the dissipation inequality it satisfies along trajectories.

The sup runs over a seeded finite family of piecewise-constant inputs. Input
j of the family depends only on (seed, j), so a larger budget searches a
superset and the bound can only grow.
"""

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

from comparison_functions import ComparisonFunction
from configuration import CertificateTolerance, SearchRegion, Tolerances
from exceptions import FamilyClosureError
from system_model import InputSignal, InputSignalRecord, InputSystem, piecewise_uniform, simulate

from .reports import CheckReport, build_report

VALUE_DISSIPATION = "VALUE_DISSIPATION"
SAMPLE_POINTS = 257
# both sides come from separate simulations
VALUE_TOLERANCE = CertificateTolerance(absolute=1e-6, relative=1e-4)


class ValueEstimate(BaseModel):
    point: list[float]
    value: float
    time: float
    input: InputSignalRecord
    evaluations: int

    @property
    def signal(self) -> InputSignal:
        return InputSignal.from_record(self.input)


@dataclass(frozen=True)
class Candidate:
    value: float
    time: float
    signal: InputSignal


class ValueSearch:
    """Evaluates the value functional over a nested, seeded input family."""

    def __init__(self, system: InputSystem, alpha: ComparisonFunction, sigma1: ComparisonFunction,
                 region: SearchRegion | None = None, tolerances: Tolerances | None = None):
        self.system = system
        self.alpha = alpha
        self.sigma1 = sigma1
        self.region = region or SearchRegion()
        self.tolerances = tolerances or Tolerances()

    def family(self, budget: int, seed: int) -> list[InputSignal]:
        """u = 0 followed by budget - 1 random inputs; member j only depends on (seed, j)."""
        if budget < 1:
            raise ValueError("budget must be at least 1")
        family = [InputSignal.zero(self.system.input_dimension)]
        streams = np.random.SeedSequence(seed).spawn(budget - 1)
        for stream in streams:
            family.append(piecewise_uniform(np.random.default_rng(stream), self.system.input_dimension,
                                            self.region.input_bound, self.region.horizon, self.region.segments))
        return family

    def functional(self, xi, signal: InputSignal, horizon: float, sample_times: np.ndarray | None = None) -> Candidate:
        """Best t for one input: max of alpha(|x(t)|) - int_0^t sigma1(|u|).

        t ranges over the trajectory samples, or over ``sample_times`` read from the
        dense output when given.
        """
        trajectory = simulate(self.system, xi, signal, horizon, self.tolerances)
        if sample_times is None:
            times, norms = trajectory.times, trajectory.norms
        else:
            times = sample_times[sample_times <= trajectory.end_time]
            norms = np.linalg.norm(trajectory.at(times), axis=-1)
        values = self.alpha(norms) - signal.running_integral(self.sigma1, times)
        best = int(np.argmax(values))
        return Candidate(float(values[best]), float(times[best]), signal)

    def best(self, xi, family: list[InputSignal], sample_times: np.ndarray | None = None,
             horizon: float | None = None) -> Candidate:
        horizon = horizon or self.region.horizon
        candidates = [self.functional(xi, signal, horizon, sample_times) for signal in family]
        return max(candidates, key=lambda c: c.value)


def estimate_value_function(system: InputSystem, alpha: ComparisonFunction, sigma1: ComparisonFunction, xi,
                            budget: int, seed: int = 0, region: SearchRegion | None = None,
                            tolerances: Tolerances | None = None) -> ValueEstimate:
    """Lower bound for V(xi); the t = 0, u = 0 candidate makes it at least alpha(|xi|)."""
    search = ValueSearch(system, alpha, sigma1, region, tolerances)
    xi = np.asarray(xi, dtype=float).ravel()
    best = search.best(xi, search.family(budget, seed))
    logging.debug(f"V({xi.tolist()}) >= {best.value:.6g} at t={best.time:.4g}")
    return ValueEstimate(point=xi.tolist(), value=best.value, time=best.time, input=best.signal.to_record(),
                         evaluations=budget)


def check_value_dissipation(system: InputSystem, alpha: ComparisonFunction, sigma1: ComparisonFunction, xi,
                            t: float, u: InputSignal, budget: int, seed: int = 0,
                            region: SearchRegion | None = None, tolerances: Tolerances | None = None,
                            tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Check V(x(t)) - V+(xi) <= int_0^t sigma1(|u|) on a concatenation-closed family.

    V(x(t)) uses the seeded family F at y = x(t, xi, u). V+(xi) runs over F
    together with every u # v for v in F, each simulated from xi. Inputs
    past t only matter through v.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    search = ValueSearch(system, alpha, sigma1, region, tolerances)
    xi = np.asarray(xi, dtype=float).ravel()
    family = search.family(budget, seed)
    horizon = search.region.horizon

    if t > 0:
        y = simulate(system, xi, u, t, search.tolerances).final_state
    else:
        y = xi
    grid = np.linspace(0.0, horizon, SAMPLE_POINTS)
    at_y = search.best(y, family, grid)

    closed = list(family)
    for suffix in family:
        joined = u.concat(suffix, t)
        if not joined.shift(t).same_on(suffix, horizon):
            raise FamilyClosureError("concatenated input does not continue with its suffix")
        closed.append(joined)
    at_xi = search.best(xi, closed, np.union1d(grid, t + grid), t + horizon)

    spent = u.integral(sigma1, t) if t > 0 else 0.0
    notes = [f"V(x(t)) >= {at_y.value:.6g}, V+(xi) >= {at_xi.value:.6g}, family size {len(closed)}"]
    return build_report(VALUE_DISSIPATION, [at_y.value - at_xi.value], [spent], [t], xi, u, t + horizon,
                        tolerance or VALUE_TOLERANCE, notes, seed=seed, evaluations=len(family) + len(closed))
