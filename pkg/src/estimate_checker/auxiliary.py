"""
Gain checks on the auxiliary closed loop x' = f(x, d phi(|x|)), |d| <= 1.

Along every run the quantity

    z(t) = alpha(|x(t)|) / 2 - int_0^t gamma(|d(s)| phi(|x(s)|)) ds

must stay below beta0(|xi|), and alpha(|x(t)|) below
2 beta0(|xi|) + 2 int_0^t gamma(|d| phi(|x|)).
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

from comparison_functions import ComparisonFunction, certify, default_grid
from configuration import CertificateTolerance, Tolerances
from exceptions import PreconditionError
from system_model import ControlSystem, InputSignal, close_loop, simulate

from .reports import CheckReport, build_report

AUXILIARY_GAIN = "AUXILIARY_GAIN"
STABLE_FRACTION = 0.8


def certify_phi(phi: ComparisonFunction, alpha: ComparisonFunction, gamma: ComparisonFunction, grid=None,
                tolerance: CertificateTolerance | None = None):
    """Certificate of gamma(phi(s)) <= alpha(s) / 2 on the grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    return certify(gamma(phi(grid)), 0.5 * alpha(grid), grid, "gamma(phi(s)) <= alpha(s) / 2", tolerance)


def _stabilised(z: np.ndarray, times: np.ndarray, horizon: float) -> bool:
    """True when the running sup of z stopped growing before STABLE_FRACTION of the horizon."""
    peak = int(np.argmax(z))
    return bool(times[peak] <= STABLE_FRACTION * horizon)


def _check_pair(system: ControlSystem, phi, beta0, alpha, gamma, xi, d: InputSignal, horizon: float,
                tolerances: Tolerances, tolerance: CertificateTolerance) -> tuple[CheckReport, bool]:
    loop = close_loop(system, phi, d)
    trajectory = simulate(loop, xi, d, horizon, tolerances)

    def feedback_cost(t, x, value):
        return gamma(np.linalg.norm(value, axis=-1) * phi(np.linalg.norm(x, axis=-1)))

    cost = trajectory.running_quadrature(feedback_cost)
    level = alpha(trajectory.norms)
    start = float(beta0(float(np.linalg.norm(xi))))
    z = 0.5 * level - cost
    times = trajectory.times

    lhs = np.concatenate((z, level))
    rhs = np.concatenate((np.full(times.size, start), 2.0 * start + 2.0 * cost))
    notes = []
    stable = _stabilised(z, times, trajectory.end_time)
    if not stable:
        notes.append(f"sup z still growing after {STABLE_FRACTION:.0%} of the horizon")
    report = build_report(AUXILIARY_GAIN, lhs, rhs, np.concatenate((times, times)), xi, d, horizon, tolerance,
                          notes)
    return report, stable


def auxiliary_gain_check(system: ControlSystem, phi: ComparisonFunction, beta0: ComparisonFunction,
                         alpha: ComparisonFunction, gamma: ComparisonFunction, disturbances: list[InputSignal],
                         initial_states, horizon: float, grid=None, tolerances: Tolerances | None = None,
                         tolerance: CertificateTolerance | None = None, jobs: int = 1) -> CheckReport:
    """Check the z bound and the doubled bound for every (xi, d) pair of the two batches.

    Raises:
        PreconditionError: gamma(phi(s)) <= alpha(s) / 2 fails on the grid.
    """
    certificate = certify_phi(phi, alpha, gamma, grid, tolerance)
    if not certificate.passed:
        raise PreconditionError(f"phi violates gamma(phi(s)) <= alpha(s) / 2 near s = {certificate.worst_point}",
                                certificate)
    tolerances = tolerances or Tolerances()
    tolerance = tolerance or CertificateTolerance()
    pairs = [(np.asarray(xi, dtype=float).ravel(), d) for xi in np.atleast_2d(initial_states) for d in disturbances]
    if not pairs:
        raise ValueError("at least one initial state and one disturbance are required")

    results: list[tuple[CheckReport, bool] | None] = [None] * len(pairs)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        future_to_index = {
            executor.submit(_check_pair, system, phi, beta0, alpha, gamma, xi, d, horizon, tolerances, tolerance): i
            for i, (xi, d) in enumerate(pairs)
        }
        for future in as_completed(future_to_index):
            results[future_to_index[future]] = future.result()

    worst = min(range(len(results)), key=lambda i: results[i][0].margin)
    report = results[worst][0]
    stable_runs = sum(1 for _, stable in results if stable)
    notes = list(report.notes) + [f"sup z stabilised before {STABLE_FRACTION:.0%} of the horizon on "
                                  f"{stable_runs} of {len(results)} runs"]
    logging.info(f"Auxiliary gain check on {len(pairs)} runs: {report.verdict.value}, margin {report.margin:.6g}")
    return report.model_copy(update={"notes": notes, "tolerances": tolerances, "evaluations": len(pairs)})
