"""
Estimate checks along a single trajectory, and witness replay.
"""

import logging

import numpy as np

from configuration import CertificateTolerance, Tolerances
from exceptions import EstimateSpecError
from system_model import InputSignal, InputSystem, Trajectory, simulate

from .handlers import EstimateHandlerFactory
from .reports import CheckReport
from .spec import INTEGRAL_FORMS, POINTWISE_FORMS, EstimateSpec

REPLAY_TIGHTENING = 10.0


def _run_check(trajectory: Trajectory, signal: InputSignal, xi, spec: EstimateSpec,
               tolerance: CertificateTolerance | None, validate: bool) -> CheckReport:
    if signal is not None and not signal.same_on(trajectory.signal, trajectory.end_time):
        raise ValueError("trajectory was simulated with a different input signal")
    xi = np.asarray(xi, dtype=float).ravel()
    if not np.allclose(xi, trajectory.initial_state, rtol=0.0, atol=1e-12):
        raise ValueError("trajectory does not start at xi")
    if validate:
        spec.validate_classes()
    return EstimateHandlerFactory.create_handler(spec).check(trajectory, xi, tolerance)


def check_pointwise(trajectory: Trajectory, signal: InputSignal, xi, spec: EstimateSpec,
                    tolerance: CertificateTolerance | None = None, validate: bool = True) -> CheckReport:
    """Check a pointwise-in-time estimate at every trajectory sample.

    Input functionals on the right-hand side are exact for piecewise-constant
    signals. Slots are class-verified first unless ``validate`` is False.
    """
    if spec.form not in POINTWISE_FORMS:
        raise EstimateSpecError(f"{spec.form.value} is not a pointwise estimate; use check_integral")
    return _run_check(trajectory, signal, xi, spec, tolerance, validate)


def check_integral(trajectory: Trajectory, signal: InputSignal, xi, spec: EstimateSpec,
                   tolerance: CertificateTolerance | None = None, validate: bool = True) -> CheckReport:
    """Check an integral estimate; state integrals use Simpson's rule on the dense output."""
    if spec.form not in INTEGRAL_FORMS:
        raise EstimateSpecError(f"{spec.form.value} is not an integral estimate; use check_pointwise")
    return _run_check(trajectory, signal, xi, spec, tolerance, validate)


def check_trajectory(trajectory: Trajectory, xi, spec: EstimateSpec,
                     tolerance: CertificateTolerance | None = None, validate: bool = True) -> CheckReport:
    """Dispatch to the pointwise or integral check by form."""
    if spec.form in INTEGRAL_FORMS:
        return check_integral(trajectory, None, xi, spec, tolerance, validate)
    return check_pointwise(trajectory, None, xi, spec, tolerance, validate)


def replay_witness(system: InputSystem, spec: EstimateSpec, report: CheckReport,
                   tolerances: Tolerances | None = None) -> CheckReport:
    """Re-simulate a report's witness with integrator tolerances tightened tenfold and re-check it."""
    if report.witness is None:
        raise ValueError("report has no witness to replay")
    tolerances = (tolerances or report.tolerances or Tolerances()).tightened(REPLAY_TIGHTENING)
    witness = report.witness
    trajectory = simulate(system, witness.xi, witness.signal, witness.horizon, tolerances)
    replayed = check_trajectory(trajectory, witness.xi, spec, report.tolerance, validate=False)
    logging.debug(f"Replayed witness: margin {report.margin:.6g} -> {replayed.margin:.6g}")
    return replayed.model_copy(update={"tolerances": tolerances, "seed": report.seed})


def witness_replays(original: CheckReport, replayed: CheckReport) -> bool:
    """A violation replays when the tighter run keeps at least half of the negative margin."""
    if not original.violated:
        return True
    return replayed.violated and replayed.margin <= 0.5 * original.margin
