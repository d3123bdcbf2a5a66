"""
Unit tests for the comparison principle and Lyapunov dissipation checks.
"""

import math
import unittest

import numpy as np

from comparison_functions import ComparisonFunction
from configuration import Tolerances
from estimate_checker import (
    Verdict,
    check_comparison_principle,
    check_domination,
    check_lyapunov_dissipation,
    comparison_bound,
    dissipation_samples,
    gradient_agreement,
)
from estimate_checker.lyapunov import GradientMode
from exceptions import DomainError, GridMismatchError
from system_model import InputSignal, StateFunction, parse_system, piecewise_uniform

IDENTITY = ComparisonFunction.identity()
SQUARE = ComparisonFunction.power(1.0, 2.0)
TIGHT = Tolerances(atol=1e-10, rtol=1e-9)


class TestComparisonBound(unittest.TestCase):
    """Scalar comparison problem against closed forms."""

    def test_free_decay(self):
        """Test w' = -w from 1 is e^-t."""
        w = comparison_bound(InputSignal.zero(1), IDENTITY, IDENTITY, 1.0, 5.0, TIGHT)
        np.testing.assert_allclose(w([0.0, 1.0, 5.0]), np.exp([0.0, -1.0, -5.0]), atol=1e-7)

    def test_constant_forcing(self):
        """Test w' = 1 - w from 0 is 1 - e^-t."""
        w = comparison_bound(InputSignal.constant([1.0]), IDENTITY, IDENTITY, 0.0, 4.0, TIGHT)
        self.assertAlmostEqual(float(w(2.0)), 1.0 - math.exp(-2.0), delta=1e-7)

    def test_quadratic_decay(self):
        """Test w' = -w^2 from 1 is 1 / (1 + t)."""
        w = comparison_bound(InputSignal.zero(1), IDENTITY, SQUARE, 1.0, 9.0, TIGHT)
        self.assertAlmostEqual(float(w(9.0)), 0.1, delta=1e-7)

    def test_invalid_arguments(self):
        """Test a negative start and reads outside the horizon."""
        with self.assertRaises(DomainError):
            comparison_bound(InputSignal.zero(1), IDENTITY, IDENTITY, -1.0, 1.0)
        w = comparison_bound(InputSignal.zero(1), IDENTITY, IDENTITY, 1.0, 1.0)
        with self.assertRaises(GridMismatchError):
            w(2.0)
        with self.assertRaises(GridMismatchError):
            w(-0.5)


class TestDomination(unittest.TestCase):
    """V(x(t)) <= w(t) + eps along simulated runs."""

    def setUp(self):
        # V' = 2x(-x + u) <= -V + u^2
        self.system = parse_system("n=1 m=1\ndx1 = -x1 + u1")
        self.v = StateFunction.parse("x1^2", 1)

    def test_constant_input(self):
        """Test x' = -x + u with V = x^2 and u = 0.7."""
        report = check_comparison_principle(self.system, self.v, SQUARE, IDENTITY, [1.5],
                                            InputSignal.constant([0.7]), 5.0, TIGHT)
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertIn("eps", report.notes[0])

    def test_zero_function(self):
        """Test V = 0 is dominated by any nonnegative w."""
        zero = StateFunction.parse("0", 1)
        report = check_comparison_principle(self.system, zero, SQUARE, IDENTITY, [1.0],
                                            InputSignal.constant([1.0]), 3.0)
        self.assertEqual(report.verdict, Verdict.HOLDS)

    def test_random_runs(self):
        """Test domination with sigma(r) = 2 r^2 on 100 seeded (xi, u) pairs, |xi| <= 3, ||u|| <= 2."""
        sigma = ComparisonFunction.power(2.0, 2.0)
        rng = np.random.default_rng(11)
        for _ in range(100):
            xi = rng.uniform(-3.0, 3.0, 1)
            signal = piecewise_uniform(rng, 1, 2.0, 10.0, 5)
            report = check_comparison_principle(self.system, self.v, sigma, IDENTITY, xi, signal, 10.0, TIGHT)
            self.assertGreaterEqual(report.margin, -1e-6)

    def test_length_mismatch(self):
        """Test V samples and times of different lengths."""
        w = comparison_bound(InputSignal.zero(1), IDENTITY, IDENTITY, 1.0, 1.0)
        with self.assertRaises(GridMismatchError):
            check_domination([1.0, 0.5], [0.0], w)


class TestLyapunovDissipation(unittest.TestCase):
    """DV(x) f(x, u) <= -rho(|x|) + sigma(|u|) at sampled points."""

    def setUp(self):
        self.system = parse_system("n=1 m=1\ndx1 = -x1 + u1")
        self.v = StateFunction.parse("x1^2", 1)
        self.states, self.inputs = dissipation_samples(1, 1, 200, 2.0, 2.0, seed=4)

    def test_holds(self):
        """Test 2x(-x + u) <= -x^2 + u^2."""
        report = check_lyapunov_dissipation(self.system, self.v, SQUARE, SQUARE, self.states, self.inputs)
        self.assertEqual(report.verdict, Verdict.HOLDS)

    def test_origin_only(self):
        """Test the origin pair gives margin 0."""
        report = check_lyapunov_dissipation(self.system, self.v, SQUARE, SQUARE, [[0.0]], [[0.0]],
                                            gradient=GradientMode.ANALYTIC)
        self.assertEqual(report.margin, 0.0)

    def test_product_form(self):
        """Test 2x(-x + u) <= 2|x| |u|."""
        report = check_lyapunov_dissipation(self.system, self.v, None, IDENTITY, self.states, self.inputs,
                                            theta=ComparisonFunction.linear(2.0))
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertIn("product form", report.notes[0])

    def test_too_strong_decay(self):
        """Test rho(r) = 3 r^2 is violated."""
        report = check_lyapunov_dissipation(self.system, self.v, ComparisonFunction.power(3.0, 2.0), SQUARE,
                                            self.states, self.inputs)
        self.assertEqual(report.verdict, Verdict.VIOLATED)
        self.assertEqual(report.witness.time, 0.0)

    def test_gradient_agreement(self):
        """Test finite differences match the analytic gradient."""
        v = StateFunction.parse("x1^2 + 3*x1*x2", 2)
        states, _ = dissipation_samples(2, 1, 20, 3.0, 1.0)
        self.assertLess(gradient_agreement(v, states), 1e-6)

    def test_invalid_samples(self):
        """Test mismatched batches and a missing rho."""
        with self.assertRaises(ValueError):
            check_lyapunov_dissipation(self.system, self.v, SQUARE, SQUARE, self.states, self.inputs[:3])
        with self.assertRaises(ValueError):
            check_lyapunov_dissipation(self.system, self.v, None, SQUARE, self.states, self.inputs)


if __name__ == "__main__":
    unittest.main()
