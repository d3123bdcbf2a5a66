"""
Unit tests for the forward-completeness bound, the reachability bound and the
auxiliary closed-loop gain check.
"""

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from comparison_functions import ComparisonFunction, FunctionClass
from configuration import SearchRegion
from estimate_checker import (
    ForwardCompleteBound,
    Verdict,
    auxiliary_gain_check,
    certify_phi,
    check_forward_complete_bound,
    energy_limited_signal,
    reach_bound_m,
)
from exceptions import DomainError, PreconditionError
from system_model import InputSignal, parse_system, piecewise_uniform, simulate

IDENTITY = ComparisonFunction.identity()
# |x(t)| <= |xi| + int |u| for x' = -x + u
LINEAR_BOUND = ForwardCompleteBound(None, IDENTITY, IDENTITY, IDENTITY)


class TestForwardCompleteBound(unittest.TestCase):
    """|x(t)| <= kappa1(t) + kappa2(|xi|) + kappa3(int gamma(|u|)) + c."""

    def setUp(self):
        self.system = parse_system("n=1 m=1\ndx1 = -x1 + u1")

    def test_holds_for_linear_system(self):
        """Test the bound under a piecewise input."""
        signal = InputSignal.from_rows([[0.0, 1.0], [2.0, -0.5]])
        trajectory = simulate(self.system, [1.0], signal, 6.0)
        self.assertEqual(check_forward_complete_bound(trajectory, signal, [1.0], LINEAR_BOUND).verdict,
                         Verdict.HOLDS)

    def test_origin(self):
        """Test xi = 0 and u = 0 sit on the bound."""
        trajectory = simulate(self.system, [0.0], InputSignal.zero(1), 2.0)
        report = check_forward_complete_bound(trajectory, None, [0.0], LINEAR_BOUND)
        self.assertEqual(report.margin, 0.0)

    def test_escape_is_violated(self):
        """Test x' = x^2 leaves any bound of this form before escaping."""
        system = parse_system("n=1 m=1\ndx1 = x1^2")
        trajectory = simulate(system, [1.0], InputSignal.zero(1), 2.0)
        report = check_forward_complete_bound(trajectory, None, [1.0], LINEAR_BOUND)
        self.assertEqual(report.verdict, Verdict.VIOLATED)
        self.assertTrue(any("escaped" in note for note in report.notes))

    def test_step_failure(self):
        """Test runs that stopped on an evaluation error are refused."""
        with self.assertLogs(level="WARNING"):
            system = parse_system("n=1 m=1\ndx1 = ln(x1 - 2) + u1")
        trajectory = simulate(system, [1.0], InputSignal.zero(1), 1.0)
        with self.assertRaises(ValueError):
            check_forward_complete_bound(trajectory, None, [1.0], LINEAR_BOUND)

    def test_negative_constant(self):
        """Test c < 0."""
        with self.assertRaises(DomainError):
            ForwardCompleteBound(None, IDENTITY, IDENTITY, IDENTITY, c=-1.0)


class TestReachBound(unittest.TestCase):
    """Sampled m(r) against M(r)."""

    def setUp(self):
        self.system = parse_system("n=1 m=1\ndx1 = -x1 + u1")

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=5.0), st.integers(min_value=0, max_value=2 ** 16))
    def test_energy_limited_signal(self, energy, seed):
        """Test sampled inputs never exceed their delta-energy."""
        delta = ComparisonFunction.power(1.0, 2.0)
        region = SearchRegion(input_bound=3.0, horizon=4.0, segments=4)
        signal = energy_limited_signal(np.random.default_rng(seed), delta, energy, 2, region)
        self.assertLessEqual(signal.integral(delta, 100.0), energy)
        self.assertEqual(signal.value_at(10.0).tolist(), [0.0, 0.0])

    def test_reach_value(self):
        """Test M(1) = kappa2(1) + kappa3(1) = 2."""
        self.assertEqual(LINEAR_BOUND.reach(1.0, IDENTITY, IDENTITY), 2.0)

    def test_reach_bound_holds(self):
        """Test sampled trajectories stay below M(1)."""
        report = reach_bound_m(self.system, 1.0, LINEAR_BOUND, IDENTITY, IDENTITY, IDENTITY, budget=8,
                               region=SearchRegion(radius=1.0, input_bound=2.0, horizon=5.0, segments=3))
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertEqual(report.evaluations, 8)

    def test_single_sample(self):
        """Test budget 1 uses u = 0 from the sphere of radius r."""
        report = reach_bound_m(self.system, 1.0, LINEAR_BOUND, IDENTITY, IDENTITY, IDENTITY, budget=1)
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertAlmostEqual(float(np.linalg.norm(report.witness.xi)), 1.0)

    def test_alpha_vanishing_at_r(self):
        """Test alpha(r) = 0 leaves M(r) undefined."""
        alpha = ComparisonFunction.expression("max(r - 1, 0)", FunctionClass.K)
        with self.assertRaises(DomainError):
            LINEAR_BOUND.reach(1.0, alpha, IDENTITY)

    def test_invalid_arguments(self):
        """Test r <= 0 and an empty budget."""
        with self.assertRaises(DomainError):
            reach_bound_m(self.system, 0.0, LINEAR_BOUND, IDENTITY, IDENTITY, IDENTITY, budget=2)
        with self.assertRaises(ValueError):
            reach_bound_m(self.system, 1.0, LINEAR_BOUND, IDENTITY, IDENTITY, IDENTITY, budget=0)


class TestAuxiliaryGain(unittest.TestCase):
    """x' = -x + d phi(|x|) with phi(s) = s / 2."""

    def setUp(self):
        self.system = parse_system("n=1 m=1\ndx1 = -x1 + u1")
        self.phi = ComparisonFunction.linear(0.5)

    def test_phi_certificate(self):
        """Test gamma(phi(s)) <= alpha(s) / 2."""
        self.assertTrue(certify_phi(self.phi, IDENTITY, IDENTITY).passed)
        self.assertFalse(certify_phi(IDENTITY, IDENTITY, IDENTITY).passed)

    def test_holds_on_constant_disturbances(self):
        """Test d = 1, d = -1 and d = 0 from two initial states."""
        disturbances = [InputSignal.constant([v]) for v in (1.0, -1.0, 0.0)]
        report = auxiliary_gain_check(self.system, self.phi, IDENTITY, IDENTITY, IDENTITY, disturbances,
                                      [[1.0], [-2.0]], 10.0)
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertEqual(report.evaluations, 6)

    def test_random_batches(self):
        """Test 10 initial states against 10 random disturbances with beta0 = 2 r."""
        rng = np.random.default_rng(8)
        disturbances = [piecewise_uniform(rng, 1, 1.0, 10.0, 5) for _ in range(10)]
        states = rng.uniform(-3.0, 3.0, (10, 1))
        report = auxiliary_gain_check(self.system, self.phi, ComparisonFunction.linear(2.0), IDENTITY, IDENTITY,
                                      disturbances, states, 10.0, jobs=2)
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertEqual(report.evaluations, 100)
        self.assertIn("stabilised", report.notes[-1])

    def test_phi_too_large(self):
        """Test phi = identity fails the precondition."""
        with self.assertRaises(PreconditionError) as ctx:
            auxiliary_gain_check(self.system, IDENTITY, IDENTITY, IDENTITY, IDENTITY, [InputSignal.zero(1)],
                                 [[1.0]], 1.0)
        self.assertFalse(ctx.exception.certificate.passed)


if __name__ == "__main__":
    unittest.main()
