"""
Forward-completeness bound along trajectories and the sampled reachability
bound m(r) = sup |x(t)| over |xi| <= r and int_0^inf delta(|u|) <= r.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from comparison_functions import ComparisonFunction
from configuration import CertificateTolerance, SearchRegion, Tolerances
from exceptions import DomainError
from system_model import InputSignal, InputSystem, Trajectory, TrajectoryStatus, ball_samples, simulate

from .reports import CheckReport, build_report

FORWARD_COMPLETE = "FORWARD_COMPLETE"
REACH_BOUND = "REACH_BOUND"
# sampled energies stay this far below r
ENERGY_SLACK = 1e-9


@dataclass(frozen=True)
class ForwardCompleteBound:
    """|x(t)| <= kappa1(t) + kappa2(|xi|) + kappa3(int_0^t gamma(|u|)) + c; a missing kappa is zero."""

    kappa1: ComparisonFunction | None
    kappa2: ComparisonFunction | None
    kappa3: ComparisonFunction | None
    gamma: ComparisonFunction
    c: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise DomainError("c must be nonnegative")

    @staticmethod
    def _apply(f: ComparisonFunction | None, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.zeros_like(r) if f is None else f(r)

    def along(self, trajectory: Trajectory, xi_norm: float) -> np.ndarray:
        times = trajectory.times
        energy = trajectory.signal.running_integral(self.gamma, times)
        return (self._apply(self.kappa1, times) + self._apply(self.kappa2, np.full_like(times, xi_norm))
                + self._apply(self.kappa3, energy) + self.c)

    def reach(self, r: float, alpha: ComparisonFunction, chi: ComparisonFunction) -> float:
        """M(r) = kappa1(chi(2r) / alpha(r)) + kappa2(r) + kappa3(r) + c."""
        level = float(alpha(r))
        if level <= 0:
            raise DomainError(f"alpha({r:g}) = 0; the reachability bound is undefined")
        crossing = float(chi(2.0 * r)) / level
        return float(self._apply(self.kappa1, crossing) + self._apply(self.kappa2, r)
                     + self._apply(self.kappa3, r) + self.c)


def check_forward_complete_bound(trajectory: Trajectory, signal: InputSignal, xi, bound: ForwardCompleteBound,
                                 tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Check the forward-completeness estimate at every sample, including the samples of an escaped run."""
    if trajectory.status is TrajectoryStatus.STEP_FAILURE:
        raise ValueError(f"trajectory did not complete: {trajectory.message}")
    if signal is not None and not signal.same_on(trajectory.signal, trajectory.end_time):
        raise ValueError("trajectory was simulated with a different input signal")
    xi = np.asarray(xi, dtype=float).ravel()
    notes = [] if trajectory.status is TrajectoryStatus.COMPLETED else [f"trajectory escaped: {trajectory.message}"]
    return build_report(FORWARD_COMPLETE, trajectory.norms, bound.along(trajectory, float(np.linalg.norm(xi))),
                        trajectory.times, xi, trajectory.signal, trajectory.horizon, tolerance, notes)


def energy_limited_signal(rng: np.random.Generator, delta: ComparisonFunction, energy: float, dimension: int,
                          region: SearchRegion) -> InputSignal:
    """Random input on [0, T], zero afterwards, with int_0^inf delta(|u|) <= energy exactly.

    Values are drawn in the ball of radius U and scaled down radially until
    the energy fits.
    """
    breakpoints = np.linspace(0.0, region.horizon, region.segments + 1)
    width = region.horizon / region.segments
    raw = ball_samples(rng, region.segments, dimension, region.input_bound)
    norms = np.linalg.norm(raw, axis=1) if dimension else np.zeros(region.segments)

    def used(scale: float) -> float:
        return float(np.sum(delta(scale * norms)) * width)

    target = energy * (1.0 - ENERGY_SLACK)
    scale = 1.0
    if used(1.0) > target:
        scale = optimize.brentq(lambda s: used(s) - target, 0.0, 1.0, xtol=1e-14)
        while scale > 0 and used(scale) > energy:
            scale *= 1.0 - ENERGY_SLACK
    values = np.vstack((scale * raw, np.zeros((1, dimension))))
    return InputSignal(breakpoints, values)


def reach_bound_m(system: InputSystem, r: float, bound: ForwardCompleteBound, alpha: ComparisonFunction,
                  chi: ComparisonFunction, sigma: ComparisonFunction, budget: int, seed: int = 0,
                  region: SearchRegion | None = None, tolerances: Tolerances | None = None,
                  tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Sample m(r) and compare it with M(r).

    Inputs are limited in delta-energy, delta = max(gamma, sigma); the first
    sample is u = 0 from a state on the sphere of radius r.
    """
    if r <= 0:
        raise DomainError("r must be positive")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    region = region or SearchRegion(radius=r)
    delta = bound.gamma.maximum(sigma)
    limit = bound.reach(r, alpha, chi)

    n, m = system.state_dimension, system.input_dimension
    streams = np.random.SeedSequence(seed).spawn(budget)
    best_norm, best = -np.inf, None
    for index, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        if index == 0:
            direction = ball_samples(rng, 1, n, 1.0).ravel()
            xi = r * direction / max(float(np.linalg.norm(direction)), np.finfo(float).tiny)
            signal = InputSignal.zero(m)
        else:
            xi = ball_samples(rng, 1, n, r).ravel()
            signal = energy_limited_signal(rng, delta, r * rng.uniform(), m, region)
        trajectory = simulate(system, xi, signal, region.horizon, tolerances)
        peak = int(np.argmax(trajectory.norms))
        if trajectory.norms[peak] > best_norm:
            best_norm, best = float(trajectory.norms[peak]), (xi, signal, float(trajectory.times[peak]))

    xi, signal, time = best
    logging.info(f"m({r:g}) >= {best_norm:.6g}, bound M({r:g}) = {limit:.6g}")
    return build_report(REACH_BOUND, [best_norm], [limit], [time], xi, signal, region.horizon, tolerance,
                        notes=[f"sampled m(r) = {best_norm:.6g} over {budget} samples"], seed=seed,
                        evaluations=budget)
