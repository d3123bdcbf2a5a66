"""
Dissipation inequalities for a user-supplied V, checked at sampled (x, u) pairs.
"""

import logging
from enum import Enum

import numpy as np

from comparison_functions import ComparisonFunction
from configuration import CertificateTolerance
from system_model import ControlSystem, StateFunction, ball_samples

from .reports import CheckReport, build_sample_report

LYAPUNOV_DISSIPATION = "LYAPUNOV_DISSIPATION"


class GradientMode(str, Enum):
    FINITE_DIFFERENCE = "finite-difference"
    ANALYTIC = "analytic"


def dissipation_samples(state_dimension: int, input_dimension: int, count: int, state_radius: float,
                        input_bound: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (x, u) batch drawn uniformly from the two balls; the origin pair comes first."""
    rng = np.random.default_rng(seed)
    states = ball_samples(rng, count, state_dimension, state_radius)
    inputs = ball_samples(rng, count, input_dimension, input_bound)
    states[0] = 0.0
    inputs[0] = 0.0
    return states, inputs


def _gradients(v: StateFunction, states: np.ndarray, mode: GradientMode) -> np.ndarray:
    if mode is GradientMode.ANALYTIC:
        return np.array([v.gradient(x) for x in states])
    return np.array([v.finite_difference_gradient(x) for x in states])


def check_lyapunov_dissipation(
    system: ControlSystem,
    v: StateFunction,
    rho: ComparisonFunction | None,
    sigma: ComparisonFunction,
    states,
    inputs,
    theta: ComparisonFunction | None = None,
    gradient: GradientMode = GradientMode.FINITE_DIFFERENCE,
    tolerance: CertificateTolerance | None = None,
) -> CheckReport:
    """Check DV(x) f(x, u) <= -rho(|x|) + sigma(|u|) at every sample.

    With ``theta`` given the product form DV(x) f(x, u) <= theta(|x|) sigma(|u|)
    is checked instead and ``rho`` is ignored.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if states.shape[0] != inputs.shape[0]:
        raise ValueError("one input sample is needed per state sample")
    if theta is None and rho is None:
        raise ValueError("either rho or theta is required")

    grads = _gradients(v, states, gradient)
    fields = np.array([system.vector_field(x, u) for x, u in zip(states, inputs)])
    lhs = np.einsum("ij,ij->i", grads, fields)
    state_norms = np.linalg.norm(states, axis=1)
    input_norms = np.linalg.norm(inputs, axis=1)
    if theta is None:
        rhs = -rho(state_norms) + sigma(input_norms)
        notes = []
    else:
        rhs = theta(state_norms) * sigma(input_norms)
        notes = ["product form DV f <= theta(|x|) sigma(|u|)"]
    report = build_sample_report(LYAPUNOV_DISSIPATION, lhs, rhs, states, inputs, tolerance, notes)
    logging.info(f"Dissipation check on {states.shape[0]} samples: {report.verdict.value}, "
                 f"margin {report.margin:.6g}")
    return report


def gradient_agreement(v: StateFunction, states) -> float:
    """Largest relative deviation of the finite-difference gradient from the analytic one."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    exact = _gradients(v, states, GradientMode.ANALYTIC)
    approx = _gradients(v, states, GradientMode.FINITE_DIFFERENCE)
    scale = np.maximum(np.linalg.norm(exact, axis=1), 1.0)
    return float(np.max(np.linalg.norm(approx - exact, axis=1) / scale))
