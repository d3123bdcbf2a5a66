"""
End-to-end acceptance runs on seeded batches.

Smaller oracles (integrator accuracy, construction chains, falsifier
determinism and replay) live next to the modules they exercise.
"""

import unittest

import numpy as np

from comparison_functions import ComparisonFunction
from counterexample import check_x1_bound, check_x2_bound, counterexample_system, not_iss_witness, witness_deviation
from estimate_checker import Verdict
from system_model import InputSignal, ball_samples, piecewise_uniform, simulate

HORIZON = 20.0
CASES = 500
SEGMENTS = 4


def large_input(rng: np.random.Generator) -> InputSignal:
    """Signal whose pieces all have magnitude in [1/2, 5]."""
    breakpoints = np.linspace(0.0, HORIZON, SEGMENTS + 1)[:-1]
    values = rng.uniform(0.5, 5.0, (SEGMENTS, 1)) * rng.choice([-1.0, 1.0], (SEGMENTS, 1))
    return InputSignal(breakpoints, values)


class TestCounterexampleBatches(unittest.TestCase):
    """Bounds on x1 and x2 over seeded batches of initial states and inputs."""

    def test_equilibrium_witness(self):
        """Test the equilibrium above the identity gain stays put and beats it by almost 1."""
        xi, u, report = not_iss_witness(ComparisonFunction.identity())
        trajectory = simulate(counterexample_system(), xi, u, 50.0)
        self.assertLessEqual(witness_deviation(trajectory, xi), 1e-6)
        self.assertEqual(report.verdict, Verdict.VIOLATED)
        self.assertLessEqual(report.margin, -(1.0 - 1e-3))

    def test_small_inputs(self):
        """Test |x1(t)| <= |xi1| e^|xi2| e^(-t/2) for ||u|| <= 1/2 and |xi| <= 5."""
        rng = np.random.default_rng(2024)
        for xi in ball_samples(rng, CASES, 2, 5.0):
            u = piecewise_uniform(rng, 1, 0.5, HORIZON, SEGMENTS)
            report = check_x1_bound(xi, u, HORIZON)
            self.assertGreaterEqual(report.margin, -1e-6)

    def test_large_inputs(self):
        """Test |x1(t)| <= |xi1| e^|xi2| and the x2 bound once ||u|| >= 1/2."""
        rng = np.random.default_rng(2025)
        sample_times = np.linspace(0.0, HORIZON, 11)
        for xi in ball_samples(rng, CASES, 2, 5.0):
            u = large_input(rng)
            report = check_x1_bound(xi, u, HORIZON)
            self.assertGreaterEqual(report.margin, -1e-6)
            for t in sample_times:
                self.assertGreaterEqual(check_x2_bound(float(xi[1]), u, float(t)), -1e-9)

    def test_small_input_envelope_is_attained_at_start(self):
        """Test the x1 envelope equals |xi1| e^|xi2| at t = 0."""
        report = check_x1_bound([1.0, 0.0], InputSignal.zero(1), 1.0)
        self.assertEqual(report.verdict, Verdict.HOLDS)
        self.assertAlmostEqual(report.margin, 0.0, delta=1e-9)
        self.assertEqual(report.witness.time, 0.0)


if __name__ == "__main__":
    unittest.main()
