"""
Handlers for estimates that compare both sides at every time instant.
"""

import numpy as np

from exceptions import PreconditionError
from system_model import Trajectory

from ..spec import EstimateForm
from .base_handler import BaseEstimateHandler, EstimateSides

NORM_SLACK = 1e-12
TAIL_FRACTION = 0.2


class PointwiseEstimateHandler(BaseEstimateHandler):
    """IISS, UBEBS, mixed sup, semiglobal and ISS bounds."""

    def sides(self, trajectory: Trajectory, xi: np.ndarray) -> EstimateSides:
        spec = self.spec
        form = spec.form
        times = trajectory.times
        signal = trajectory.signal
        norms = trajectory.norms
        xi_norm = float(np.linalg.norm(xi))
        self._check_bound(xi_norm, signal.sup_norm(trajectory.end_time))

        if form is EstimateForm.ISS:
            lhs = norms
            rhs = spec.kl("beta")(np.full_like(times, xi_norm), times) + spec.function("gamma")(
                signal.running_sup(times))
            return EstimateSides(times, lhs, rhs)

        lhs = spec.function("alpha")(norms)
        energy = signal.running_integral(spec.function("sigma"), times)
        match form:
            case EstimateForm.IISS | EstimateForm.SEMIGLOBAL:
                rhs = spec.kl("beta")(np.full_like(times, xi_norm), times) + energy
            case EstimateForm.UBEBS:
                rhs = spec.function("gamma")(xi_norm) + energy + spec.constant("c")
            case EstimateForm.MIXED_SUP:
                rhs = (spec.kl("beta")(np.full_like(times, xi_norm), times) + energy
                       + spec.function("gamma")(signal.running_sup(times)))
            case EstimateForm.MIXED_SUP_NODECAY:
                rhs = (spec.function("beta0")(xi_norm) + energy
                       + spec.function("gamma")(signal.running_sup(times)))
            case _:
                raise ValueError(f"{form.value} is not a pointwise estimate")
        return EstimateSides(times, lhs, rhs)

    def _check_bound(self, xi_norm: float, input_norm: float) -> None:
        """Semiglobal forms only speak about |xi| <= M and ||u|| <= M."""
        bound = self.spec.constant("M")
        if bound is None:
            return
        if self.spec.form is EstimateForm.SEMIGLOBAL and xi_norm > bound * (1 + NORM_SLACK):
            raise PreconditionError(f"|xi| = {xi_norm:g} exceeds the semiglobal bound M = {bound:g}")
        if input_norm > bound * (1 + NORM_SLACK):
            raise PreconditionError(f"||u|| = {input_norm:g} exceeds the semiglobal bound M = {bound:g}")


class AsymptoticGainHandler(BaseEstimateHandler):
    """limsup |x(t)| <= gamma(||u||), read off the last part of the horizon."""

    def sides(self, trajectory: Trajectory, xi: np.ndarray) -> EstimateSides:
        times = trajectory.times
        tail = times >= (1.0 - TAIL_FRACTION) * trajectory.end_time
        tail_norms = trajectory.norms[tail]
        index = int(np.argmin(tail_norms))
        gain = self.spec.function("gamma")(trajectory.signal.sup_norm(trajectory.end_time))
        note = (f"limsup approximated by the minimum of |x| over the last {TAIL_FRACTION:.0%} of "
                f"[0, {trajectory.end_time:g}]; the verdict depends on the horizon")
        return EstimateSides(times[tail][index:index + 1], tail_norms[index:index + 1], np.array([gain]), [note])
