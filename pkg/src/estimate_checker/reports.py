from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from configuration import CertificateTolerance, Tolerances
from system_model import InputSignal, InputSignalRecord


class Verdict(str, Enum):
    HOLDS = "holds-on-samples"
    VIOLATED = "violated"


class Witness(BaseModel):
    """Initial state, input and time at which an estimate was tightest (or broken)."""

    xi: list[float]
    input: InputSignalRecord
    time: float
    horizon: float

    @classmethod
    def build(cls, xi, signal: InputSignal, time: float, horizon: float) -> "Witness":
        return cls(xi=[float(v) for v in np.ravel(xi)], input=signal.to_record(), time=float(time),
                   horizon=float(horizon))

    @property
    def signal(self) -> InputSignal:
        return InputSignal.from_record(self.input)


class CheckReport(BaseModel):
    form: str
    verdict: Verdict
    margin: float
    witness: Witness | None = None
    tolerance: CertificateTolerance = Field(default_factory=CertificateTolerance)
    tolerances: Tolerances | None = None
    seed: int | None = None
    evaluations: int | None = None
    notes: list[str] = Field(default_factory=list)

    @property
    def violated(self) -> bool:
        return self.verdict is Verdict.VIOLATED


def margins(lhs, rhs, tolerance: CertificateTolerance) -> tuple[np.ndarray, np.ndarray]:
    """Raw gaps rhs - lhs and the per-sample threshold below which a gap counts as a violation."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(invalid="ignore"):
        gaps = rhs - lhs
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        thresholds = -(tolerance.absolute + tolerance.relative * np.where(np.isfinite(scale), scale, 0.0))
    gaps = np.where(np.isnan(gaps), -np.inf, gaps)
    return gaps, thresholds


def _worst(gaps: np.ndarray, thresholds: np.ndarray) -> tuple[int, bool]:
    violated = bool(np.any(gaps < thresholds))
    if violated:
        return int(np.argmin(np.where(gaps < thresholds, gaps, np.inf))), True
    return int(np.argmin(gaps)), False


def build_report(
    form: str,
    lhs,
    rhs,
    times,
    xi,
    signal: InputSignal,
    horizon: float,
    tolerance: CertificateTolerance | None = None,
    notes: list[str] | None = None,
    **extra,
) -> CheckReport:
    """Reduce two sides sampled along a trajectory into a report."""
    tolerance = tolerance or CertificateTolerance()
    gaps, thresholds = margins(lhs, rhs, tolerance)
    times = np.asarray(times, dtype=float)
    if gaps.size == 0:
        return CheckReport(form=form, verdict=Verdict.HOLDS, margin=0.0, tolerance=tolerance, notes=notes or [],
                           **extra)
    worst, violated = _worst(gaps, thresholds)
    return CheckReport(
        form=form,
        verdict=Verdict.VIOLATED if violated else Verdict.HOLDS,
        margin=float(np.clip(gaps[worst], -1e300, 1e300)),
        witness=Witness.build(xi, signal, times[worst], horizon),
        tolerance=tolerance,
        notes=notes or [],
        **extra,
    )


def build_sample_report(
    form: str,
    lhs,
    rhs,
    states,
    inputs,
    tolerance: CertificateTolerance | None = None,
    notes: list[str] | None = None,
) -> CheckReport:
    """Reduce an inequality checked at sampled (x, u) points; the witness is the worst point at t = 0."""
    tolerance = tolerance or CertificateTolerance()
    gaps, thresholds = margins(lhs, rhs, tolerance)
    worst, violated = _worst(gaps, thresholds)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    return CheckReport(
        form=form,
        verdict=Verdict.VIOLATED if violated else Verdict.HOLDS,
        margin=float(np.clip(gaps[worst], -1e300, 1e300)),
        witness=Witness.build(states[worst], InputSignal.constant(inputs[worst]), 0.0, 0.0),
        tolerance=tolerance,
        notes=notes or [],
    )
