"""
Adaptive RK 5(4) integration of input systems driven by piecewise-constant
signals.

Integration restarts at every input breakpoint so the right-hand side is
smooth on each step, and stops with a finite-escape status once the state
norm passes the blow-up threshold.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel
from scipy import optimize
from scipy.integrate import RK45, OdeSolution

from configuration import BLOWUP_THRESHOLD, Tolerances
from exceptions import DomainError

from .signals import InputSignal
from .systems import EVALUATION_ERRORS, InputSystem


class TrajectoryStatus(str, Enum):
    COMPLETED = "completed"
    FINITE_ESCAPE = "finite-escape"
    STEP_FAILURE = "step-failure"


@dataclass(frozen=True)
class BlowupReport:
    escape_time: float
    last_valid_state: np.ndarray
    norm_at_termination: float


class TrajectoryStatusRecord(BaseModel):
    status: TrajectoryStatus
    message: str
    horizon: float
    end_time: float
    steps: int
    evaluations: int
    escape_time: float | None = None
    norm_at_termination: float | None = None
    last_valid_state: list[float] | None = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    signal: InputSignal
    horizon: float
    status: TrajectoryStatus
    message: str = ""
    dense: OdeSolution | None = None
    evaluations: int = 0
    blowup: BlowupReport | None = None

    @property
    def steps(self) -> int:
        return int(self.times.size - 1)

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    def at(self, t) -> np.ndarray:
        """Dense-output state(s) at time(s) in [0, end_time]; rows are states."""
        t = np.asarray(t, dtype=float)
        if self.dense is None:
            return np.broadcast_to(self.states[0], t.shape + self.states[0].shape).copy()
        return np.asarray(self.dense(t), dtype=float).T

    def running_quadrature(self, integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Composite Simpson integral of integrand(t, x, u) over [0, times[j]] for every sample j.

        ``integrand`` receives arrays of times, states (rows) and input
        values; the input value of a step is the one active inside it.
        """
        if self.times.size == 1:
            return np.zeros(1)
        left, right = self.times[:-1], self.times[1:]
        middle = 0.5 * (left + right)
        inputs = self.signal.value_at(middle)
        start = integrand(left, self.states[:-1], inputs)
        centre = integrand(middle, self.at(middle), inputs)
        end = integrand(right, self.states[1:], inputs)
        pieces = (right - left) / 6.0 * (start + 4.0 * centre + end)
        return np.concatenate(([0.0], np.cumsum(pieces)))

    def status_record(self) -> TrajectoryStatusRecord:
        record = TrajectoryStatusRecord(
            status=self.status,
            message=self.message,
            horizon=self.horizon,
            end_time=self.end_time,
            steps=self.steps,
            evaluations=self.evaluations,
        )
        if self.blowup is not None:
            record.escape_time = self.blowup.escape_time
            record.norm_at_termination = self.blowup.norm_at_termination
            record.last_valid_state = [float(v) for v in self.blowup.last_valid_state]
        return record


def _escape_time(interpolant, t_old: float, t_new: float, threshold: float) -> float:
    def excess(t: float) -> float:
        return float(np.linalg.norm(interpolant(t))) - threshold

    if excess(t_new) <= 0:
        return t_new
    return float(optimize.bisect(excess, t_old, t_new, xtol=1e-12, maxiter=200))


def simulate(
    system: InputSystem,
    xi,
    signal: InputSignal,
    horizon: float,
    tolerances: Tolerances | None = None,
    blowup_threshold: float = BLOWUP_THRESHOLD,
) -> Trajectory:
    """Integrate x' = f(x, u(t)) from x(0) = xi over [0, horizon].

    Args:
        system: Anything with dimensions and ``vector_field(x, u)``.
        xi: Initial state.
        signal: Piecewise-constant input.
        horizon: Final time, positive.
        tolerances: Absolute and relative local error tolerances.
        blowup_threshold: State norm that declares finite escape.

    Returns:
        Trajectory with a sample at every step end and every breakpoint.
    """
    tolerances = tolerances or Tolerances()
    xi = np.asarray(xi, dtype=float).ravel()
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if xi.size != system.state_dimension:
        raise ValueError(f"initial state has {xi.size} entries, system has {system.state_dimension} states")
    if signal.dimension != system.input_dimension:
        raise ValueError(f"signal has {signal.dimension} channels, system has {system.input_dimension} inputs")

    times, states, interpolants = [0.0], [xi.copy()], []
    status, message, evaluations, blowup = TrajectoryStatus.COMPLETED, "", 0, None

    for start, end, value in signal.segments(horizon):
        def rhs(t, x, value=value):
            return system.vector_field(x, value)

        try:
            solver = RK45(rhs, start, states[-1], end, rtol=tolerances.rtol, atol=tolerances.atol)
            while solver.status == "running":
                solver.step()
                if solver.status == "failed":
                    break
                interpolant = solver.dense_output()
                norm = float(np.linalg.norm(solver.y))
                if not np.isfinite(norm) or norm > blowup_threshold:
                    t_escape = _escape_time(interpolant, solver.t_old, solver.t, blowup_threshold)
                    blowup = BlowupReport(t_escape, states[-1].copy(), norm)
                    if t_escape > times[-1]:
                        times.append(t_escape)
                        states.append(np.asarray(interpolant(t_escape), dtype=float))
                        interpolants.append(interpolant)
                    break
                times.append(solver.t)
                states.append(solver.y.copy())
                interpolants.append(interpolant)
        except EVALUATION_ERRORS as e:
            status, message = TrajectoryStatus.STEP_FAILURE, f"vector field evaluation failed near t={times[-1]:g}: {e}"
            break
        evaluations += solver.nfev
        if solver.status == "failed":
            status, message = TrajectoryStatus.STEP_FAILURE, f"at t={solver.t:g}: {solver.message}"
            break
        if blowup is not None:
            status = TrajectoryStatus.FINITE_ESCAPE
            message = f"|x| exceeded {blowup_threshold:g} at t={blowup.escape_time:.6g}"
            break

    if status is not TrajectoryStatus.COMPLETED:
        logging.debug(f"Simulation stopped early: {status.value}, {message}")

    times_array = np.asarray(times)
    dense = OdeSolution(times_array, interpolants) if interpolants else None
    return Trajectory(
        times=times_array,
        states=np.vstack(states),
        signal=signal,
        horizon=float(horizon),
        status=status,
        message=message,
        dense=dense,
        evaluations=evaluations,
        blowup=blowup,
    )
