"""
Scalar comparison problem w' = sigma(|u|) - rho(w) and the domination check
V(x(t)) <= w(t) + eps.
"""

from dataclasses import dataclass

import numpy as np

from comparison_functions import ComparisonFunction
from configuration import CertificateTolerance, Tolerances
from exceptions import DomainError, GridMismatchError
from system_model import InputSignal, InputSystem, StateFunction, Trajectory, TrajectoryStatus, simulate

from .reports import CheckReport, build_report

DOMINATION = "DOMINATION"
EPSILON_SCALE = 1e-8


def default_epsilon(w0: float) -> float:
    return EPSILON_SCALE * (1.0 + w0)


@dataclass(frozen=True)
class ComparisonSystem:
    """One-dimensional system driven by the same input as the plant."""

    sigma: ComparisonFunction
    rho: ComparisonFunction
    input_dimension: int
    state_dimension: int = 1

    def vector_field(self, w, u) -> np.ndarray:
        level = max(float(w[0]), 0.0)
        return np.array([float(self.sigma(float(np.linalg.norm(u)))) - float(self.rho(level))])


@dataclass(frozen=True, eq=False)
class ComparisonTrajectory:
    """Solution w(.) of the comparison problem, clipped at 0."""

    trajectory: Trajectory

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def values(self) -> np.ndarray:
        return np.maximum(self.trajectory.states[:, 0], 0.0)

    @property
    def initial_value(self) -> float:
        return float(self.trajectory.initial_state[0])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.trajectory.end_time * (1 + 1e-12)):
            raise GridMismatchError(f"comparison solution is defined on [0, {self.trajectory.end_time:g}]")
        states = self.trajectory.at(np.clip(t, 0.0, self.trajectory.end_time))
        return np.maximum(states[..., 0], 0.0)


def comparison_bound(signal: InputSignal, sigma: ComparisonFunction, rho_star: ComparisonFunction, w0: float,
                     horizon: float, tolerances: Tolerances | None = None) -> ComparisonTrajectory:
    """Integrate w' = sigma(|u|) - rho_star(w), w(0) = w0 >= 0, with the plant's integrator."""
    if w0 < 0:
        raise DomainError("w0 must be nonnegative")
    system = ComparisonSystem(sigma, rho_star, signal.dimension)
    trajectory = simulate(system, [w0], signal, horizon, tolerances)
    if trajectory.status is TrajectoryStatus.STEP_FAILURE:
        raise RuntimeError(f"comparison problem could not be integrated: {trajectory.message}")
    return ComparisonTrajectory(trajectory)


def check_domination(v_samples, times, w: ComparisonTrajectory, epsilon: float | None = None,
                     tolerance: CertificateTolerance | None = None, xi=None,
                     signal: InputSignal | None = None) -> CheckReport:
    """margin = min_j (w(t_j) + eps - V(x(t_j))), w read from its dense output at the plant's sample times."""
    v_samples = np.asarray(v_samples, dtype=float).ravel()
    times = np.asarray(times, dtype=float).ravel()
    if v_samples.shape != times.shape:
        raise GridMismatchError(f"{v_samples.size} V samples for {times.size} sample times")
    if epsilon is None:
        epsilon = default_epsilon(w.initial_value)
    bound = w(times) + epsilon
    signal = signal if signal is not None else w.trajectory.signal
    xi = xi if xi is not None else w.trajectory.initial_state
    return build_report(DOMINATION, v_samples, bound, times, xi, signal, w.trajectory.horizon, tolerance,
                        notes=[f"eps = {epsilon:.3g}"])


def check_comparison_principle(system: InputSystem, v: StateFunction, sigma: ComparisonFunction,
                               rho_star: ComparisonFunction, xi, signal: InputSignal, horizon: float,
                               tolerances: Tolerances | None = None,
                               tolerance: CertificateTolerance | None = None) -> CheckReport:
    """Simulate the plant from xi, solve the comparison problem from w0 = V(xi) and check domination."""
    trajectory = simulate(system, xi, signal, horizon, tolerances)
    values = np.array([v(x) for x in trajectory.states])
    w = comparison_bound(signal, sigma, rho_star, float(values[0]), trajectory.end_time, tolerances)
    return check_domination(values, trajectory.times, w, tolerance=tolerance, xi=xi, signal=signal)
