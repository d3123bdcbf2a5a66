"""
Handlers for estimates on integrals of the state.
"""

import numpy as np

from comparison_functions import ComparisonFunction
from system_model import Trajectory

from ..spec import EstimateForm
from .base_handler import BaseEstimateHandler, EstimateSides


class IntegralEstimateHandler(BaseEstimateHandler):
    """Integral-to-integral and mixed integral forms.

    State integrals use the trajectory's composite Simpson quadrature; input
    integrals are exact sums over the signal's pieces.
    """

    def _state_integral(self, trajectory: Trajectory, f) -> np.ndarray:
        return trajectory.running_quadrature(lambda t, x, u: f(np.linalg.norm(x, axis=1)))

    def sides(self, trajectory: Trajectory, xi: np.ndarray) -> EstimateSides:
        spec = self.spec
        times = trajectory.times
        signal = trajectory.signal
        xi_norm = float(np.linalg.norm(xi))

        if spec.form is EstimateForm.MIXED_LPLQ:
            p, q = spec.constant("p"), spec.constant("q")
            state = self._state_integral(trajectory, lambda r: r ** q)
            energy = signal.running_integral(spec.function("sigma").power_of(p), times)
            return EstimateSides(times, state ** (1.0 / q), (xi_norm ** p + energy) ** (1.0 / p))

        alpha = spec.function("alpha")
        state = self._state_integral(trajectory, alpha)
        energy = signal.running_integral(spec.function("sigma"), times)
        match spec.form:
            case EstimateForm.INT2INT:
                return EstimateSides(times, state, spec.function("chi")(xi_norm) + energy)
            case EstimateForm.MIXED_INT:
                inner: ComparisonFunction | None = spec.slots.get("inner_chi")
                start = inner(xi_norm) if inner is not None else xi_norm
                return EstimateSides(times, state, spec.function("chi")(start + energy))
            case EstimateForm.MIXED_GAMMA:
                return EstimateSides(times, spec.function("gamma")(state), spec.function("chi")(xi_norm) + energy)
        raise ValueError(f"{spec.form.value} is not an integral estimate")
