"""
The system

    x1' = -x1 (1 - sin x2)
    x2' = -x2 + u

which satisfies an ISS-type bound on every ball of initial states with one
KL function, yet is not ISS: the state (gamma(pi/2) + 1, pi/2) under
u = pi/2 is an equilibrium that sits above any candidate gain.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from comparison_functions import ComparisonFunction, FunctionClass, KLFunction, verify_class
from configuration import CertificateTolerance, Tolerances
from estimate_checker import CheckReport, build_report
from estimate_checker.spec import SLOT_GRID
from exceptions import DomainError, PreconditionError
from system_model import ControlSystem, InputSignal, Trajectory, ball_samples, parse_system, simulate

SYSTEM_SOURCE = "n=2 m=1\ndx1 = -x1*(1 - sin(x2))\ndx2 = -x2 + u1\n"
WITNESS_INPUT = math.pi / 2
SMALL_INPUT = 0.5
TAIL_FRACTION = 0.2
X1_BOUND = "X1_BOUND"
WITNESS = "NOT_ISS_WITNESS"
SEMIGLOBAL_BOUND = "SEMIGLOBAL_BOUND"


def counterexample_system() -> ControlSystem:
    return parse_system(SYSTEM_SOURCE)


@dataclass
class CounterexampleConfig:
    """Candidate ISS gain, state bound M and horizon for a reproduction run."""

    gamma: ComparisonFunction = field(default_factory=ComparisonFunction.identity)
    bound: float = 1.0
    horizon: float = 50.0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.bound <= 0:
            raise DomainError("state bound M must be positive")
        certificate = verify_class(self.gamma, SLOT_GRID, declared_class=FunctionClass.K)
        if not certificate.passed:
            raise PreconditionError(f"candidate gain is not of class K: {certificate.label}", certificate)


def _scalar_input(u: InputSignal) -> tuple[np.ndarray, np.ndarray]:
    if u.dimension != 1:
        raise ValueError("the counterexample has a single input channel")
    return u.breakpoints, u.values[:, 0]


def closed_form_x2(xi2: float, u: InputSignal, t):
    """x2(t) = xi2 e^-t + sum over pieces of c_i (e^(b_i - t) - e^(a_i - t)), exact for piecewise-constant u."""
    breakpoints, values = _scalar_input(u)
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("t must be nonnegative")

    def at(s: float) -> float:
        starts = breakpoints[breakpoints < s]
        ends = np.append(starts[1:], s)
        pieces = values[:starts.size] * (np.exp(ends - s) - np.exp(starts - s))
        return xi2 * math.exp(-s) + math.fsum(pieces)

    if times.ndim == 0:
        return at(float(times))
    return np.array([at(float(s)) for s in times.ravel()]).reshape(times.shape)


def x1_closed_form(xi, u: InputSignal, times) -> np.ndarray:
    """x1(t) = xi1 exp(-int_0^t (1 - sin x2(s)) ds) with x2 in closed form; the integral is taken piecewise by quad."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    times = np.atleast_1d(np.asarray(times, dtype=float))
    knots = np.union1d(times, u.breakpoints[u.breakpoints < times.max()])
    knots = np.union1d([0.0], knots)

    def rate(s: float) -> float:
        return 1.0 - math.sin(closed_form_x2(xi2, u, s))

    pieces = [integrate.quad(rate, a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(knots[:-1], knots[1:])]
    decay = np.concatenate(([0.0], np.cumsum(pieces)))
    return xi1 * np.exp(-decay[np.searchsorted(knots, times)])


def check_x2_bound(xi2: float, u: InputSignal, t: float) -> float:
    """|xi2| e^-t + ||u||_[0,t] - |x2(t)|; never negative."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return abs(xi2) * math.exp(-t) + u.sup_norm(t) - abs(closed_form_x2(xi2, u, t))


def x1_envelope(xi, u: InputSignal, times) -> np.ndarray:
    """|xi1| e^|xi2| e^(-t/2) while ||u||_[0,t] <= 1/2, |xi1| e^|xi2| afterwards."""
    times = np.asarray(times, dtype=float)
    scale = abs(float(xi[0])) * math.exp(abs(float(xi[1])))
    small = u.running_sup(times) <= SMALL_INPUT
    return np.where(small, scale * np.exp(-times / 2.0), scale)


def check_x1_bound(xi, u: InputSignal, t: float, tolerances: Tolerances | None = None,
                   tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Simulate the system on [0, t] and check |x1| against its envelope at every sample."""
    trajectory = simulate(counterexample_system(), xi, u, t, tolerances)
    if trajectory.status.value != "completed":
        raise RuntimeError(f"simulation failed: {trajectory.message}")
    lhs = np.abs(trajectory.states[:, 0])
    return build_report(X1_BOUND, lhs, x1_envelope(xi, u, trajectory.times), trajectory.times, xi, u, t,
                        tolerance, tolerances=tolerances)


def witness_state(gamma: ComparisonFunction) -> np.ndarray:
    return np.array([float(gamma(WITNESS_INPUT)) + 1.0, WITNESS_INPUT])


def not_iss_witness(gamma: ComparisonFunction, horizon: float = 50.0, tolerances: Tolerances | None = None,
                    tolerance: CertificateTolerance | None = None) -> tuple[np.ndarray, InputSignal, CheckReport]:
    """Equilibrium above the candidate gain.

    The margin compares |x1|, a lower bound for |x|, with gamma(pi/2); its
    limsup is read as the max over the last fifth of the horizon. At the
    equilibrium the margin is -1 for every gain.
    """
    xi = witness_state(gamma)
    u = InputSignal.constant([WITNESS_INPUT])
    trajectory = simulate(counterexample_system(), xi, u, horizon, tolerances)
    tail = trajectory.times >= (1.0 - TAIL_FRACTION) * trajectory.end_time
    first = np.abs(trajectory.states[:, 0])
    peak = int(np.argmax(np.where(tail, first, -np.inf)))
    gain = float(gamma(WITNESS_INPUT))
    notes = [
        f"x1 stays at {xi[0]:.6g}, exceeding gamma(pi/2) = {gain:.6g} by {xi[0] - gain:.6g}",
        f"max |x(t) - xi| = {witness_deviation(trajectory, xi):.3g}",
        f"margin measured on |x1|; |x| = {trajectory.norms[peak]:.6g} at the same time",
    ]
    report = build_report(WITNESS, [first[peak]], [gain], [trajectory.times[peak]], xi, u, horizon,
                          tolerance, notes, tolerances=tolerances)
    logging.info(f"Witness xi = ({xi[0]:.6g}, {xi[1]:.6g}): {report.verdict.value}, margin {report.margin:.6g}")
    return xi, u, report


def witness_deviation(trajectory: Trajectory, xi) -> float:
    return float(np.max(np.linalg.norm(trajectory.states - np.asarray(xi, dtype=float), axis=1)))


def semiglobal_gain(bound: float) -> tuple[KLFunction, ComparisonFunction]:
    """beta(s, t) = s e^s e^(-t/2) for every M, and the ramp gamma_M(r) = 2 r M e^M."""
    if bound <= 0:
        raise DomainError("M must be positive")
    beta = KLFunction.product(
        ComparisonFunction.expression("r*exp(r)", FunctionClass.K_INF),
        ComparisonFunction.expression("exp(-r/2)", FunctionClass.L),
    )
    return beta, ComparisonFunction.linear(2.0 * bound * math.exp(bound))


def semiglobal_envelope(xi, u: InputSignal, times, bound: float) -> np.ndarray:
    """beta(|xi|, t) + gamma_M(||u||) + |xi2| e^-t + ||u||, the x1 and x2 bounds added."""
    beta, gamma = semiglobal_gain(bound)
    times = np.asarray(times, dtype=float)
    sup = u.running_sup(times)
    xi_norm = float(np.linalg.norm(xi))
    return beta(np.full_like(times, xi_norm), times) + gamma(sup) + abs(float(xi[1])) * np.exp(-times) + sup


def check_semiglobal_bound(xi, u: InputSignal, horizon: float, bound: float, tolerances: Tolerances | None = None,
                           tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Check |x(t)| against the combined bound for |xi| <= M."""
    xi = np.asarray(xi, dtype=float)
    if np.linalg.norm(xi) > bound:
        raise PreconditionError(f"|xi| = {np.linalg.norm(xi):g} exceeds M = {bound:g}")
    trajectory = simulate(counterexample_system(), xi, u, horizon, tolerances)
    return build_report(SEMIGLOBAL_BOUND, trajectory.norms, semiglobal_envelope(xi, u, trajectory.times, bound),
                        trajectory.times, xi, u, horizon, tolerance, tolerances=tolerances)


@dataclass
class CounterexampleRun:
    xi: np.ndarray
    signal: InputSignal
    report: CheckReport
    trajectory_rows: list[tuple[float, ...]]
    margin_rows: list[tuple[float, ...]]


def reproduce(config: CounterexampleConfig, samples: int = 16, seed: int = 0) -> CounterexampleRun:
    """Witness run, closed form against simulation along it, and bound margins on a seeded batch."""
    xi, u, report = not_iss_witness(config.gamma, config.horizon, config.tolerances)
    trajectory = simulate(counterexample_system(), xi, u, config.horizon, config.tolerances)
    x1 = x1_closed_form(xi, u, trajectory.times)
    x2 = closed_form_x2(xi[1], u, trajectory.times)
    trajectory_rows = [
        (float(t), float(s[0]), float(s[1]), float(a), float(b))
        for t, s, a, b in zip(trajectory.times, trajectory.states, x1, x2)
    ]

    rng = np.random.default_rng(seed)
    margin_rows = []
    sample_times = np.linspace(0.0, config.horizon, 11)
    for index in range(samples):
        start = ball_samples(rng, 1, 2, config.bound).ravel()
        signal = InputSignal(np.linspace(0.0, config.horizon, 5)[:-1],
                             rng.uniform(-config.bound, config.bound, (4, 1)))
        run = simulate(counterexample_system(), start, signal, config.horizon, config.tolerances)
        states = run.at(sample_times)
        norms = np.linalg.norm(states, axis=1)
        x1_margin = x1_envelope(start, signal, sample_times) - np.abs(states[:, 0])
        x2_margin = [check_x2_bound(start[1], signal, t) for t in sample_times]
        combined = semiglobal_envelope(start, signal, sample_times, config.bound) - norms
        margin_rows += [(index, float(t), float(a), float(b), float(c))
                        for t, a, b, c in zip(sample_times, x1_margin, x2_margin, combined)]
    logging.info(f"Counterexample reproduced: witness {report.verdict.value}, {samples} bound samples")
    return CounterexampleRun(xi, u, report, trajectory_rows, margin_rows)
