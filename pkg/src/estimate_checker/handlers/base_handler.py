"""
Base abstract class for estimate handlers.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from configuration import CertificateTolerance
from system_model import Trajectory

from ..reports import CheckReport, build_report
from ..spec import EstimateSpec


@dataclass
class EstimateSides:
    """Both sides of an estimate evaluated at trajectory sample times."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    notes: list[str] = field(default_factory=list)


class BaseEstimateHandler(ABC):
    """Abstract base class for checking one estimate form along a trajectory."""

    def __init__(self, spec: EstimateSpec):
        self.spec = spec

    @abstractmethod
    def sides(self, trajectory: Trajectory, xi: np.ndarray) -> EstimateSides:
        """
        Evaluate the left and right side of the estimate.

        Args:
            trajectory: Simulated trajectory; its signal is the input u
            xi: Initial state

        Returns:
            EstimateSides sampled on the trajectory grid
        """
        pass

    def check(self, trajectory: Trajectory, xi, tolerance: CertificateTolerance | None = None) -> CheckReport:
        """Reduce the sampled sides into a report with the worst margin and its witness."""
        xi = np.asarray(xi, dtype=float).ravel()
        sides = self.sides(trajectory, xi)
        notes = list(sides.notes)
        if trajectory.status.value != "completed":
            notes.append(f"trajectory {trajectory.status.value}: {trajectory.message}")
        report = build_report(
            self.spec.form.value,
            sides.lhs,
            sides.rhs,
            sides.times,
            xi,
            trajectory.signal,
            trajectory.horizon,
            tolerance,
            notes,
        )
        logging.debug(f"{self.spec.form.value} check: {report.verdict.value}, margin {report.margin:.6g}")
        return report
