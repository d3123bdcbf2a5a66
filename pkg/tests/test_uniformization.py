"""
Unit tests for the uniform bound over indexed families of estimates.
"""

import itertools
import unittest

import numpy as np

from comparison_functions import (
    ComparisonFunction,
    FunctionFamily,
    KLFunction,
    SampledTuple,
    certify,
    left_side,
    uniformize,
    value_grid,
)
from comparison_functions.uniformization import family_index
from configuration import UniformizationSamples

IDENTITY = ComparisonFunction.identity()
SAMPLES = UniformizationSamples(radius=1.0, input_bound=1.0, horizon=5.0, count=200, seed=3)


def constant_input(radius: float, input_bound: float, horizon: float) -> SampledTuple:
    return SampledTuple(radius, input_bound, horizon, (0.0,), (input_bound,))


class TestConstantFamilies(unittest.TestCase):
    """Families that do not depend on their index."""

    def setUp(self):
        self.beta_family = FunctionFamily.constant(KLFunction.exponential(1.0), 3)
        self.identity_family = FunctionFamily.constant(IDENTITY, 3)
        self.result = uniformize(self.beta_family, self.identity_family, self.identity_family, IDENTITY, IDENTITY,
                                 SAMPLES)

    def test_certificates_pass(self):
        """Test the master inequality and both of its parts."""
        self.assertTrue(self.result.certificate.passed)
        self.assertTrue(self.result.step_certificates["decaying part"].passed)
        self.assertTrue(self.result.step_certificates["integral part"].passed)

    def test_right_side_dominates_common_bound(self):
        """Test r e^-t + int phi stays below the uniform right side on a grid of tuples."""
        for radius, input_bound, horizon in itertools.product(value_grid(1.0)[::10], (0.0, 0.5, 1.0),
                                                              (0.0, 1.0, 5.0)):
            sample = constant_input(float(radius), input_bound, horizon)
            common = float(radius) * np.exp(-horizon) + input_bound * horizon
            with self.subTest(radius=radius, input_bound=input_bound, horizon=horizon):
                self.assertGreaterEqual(self.result.right_side(sample, IDENTITY, IDENTITY) * (1 + 1e-6) + 1e-9,
                                        common)


class TestIndexedFamilies(unittest.TestCase):
    """beta_M(r, t) = M r e^-t with identity gains."""

    def setUp(self):
        self.beta_family = FunctionFamily.from_callable(lambda m: KLFunction.exponential(float(m)), 3)
        self.identity_family = FunctionFamily.constant(IDENTITY, 3)
        self.result = uniformize(self.beta_family, self.identity_family, self.identity_family, IDENTITY, IDENTITY,
                                 SAMPLES)

    def test_direct_evaluation(self):
        """Test R = 1, S = 0, T = 0, phi = 0: the left side is beta_1(1, 0) = 1."""
        sample = constant_input(1.0, 0.0, 0.0)
        lhs = left_side(self.beta_family, self.identity_family, self.identity_family, IDENTITY, IDENTITY, sample)
        self.assertEqual(lhs, 1.0)
        self.assertGreaterEqual(self.result.right_side(sample, IDENTITY, IDENTITY), 1.0)

    def test_bound_on_default_grid(self):
        """Test the family estimate against the uniform bound at indices 1 and 2 over grid tuples."""
        lhs, rhs, points = [], [], []
        for radius, input_bound, horizon in itertools.product(value_grid(SAMPLES.radius)[::6], (0.0, 0.4, 1.0),
                                                              (0.0, 0.5, 2.0, 5.0)):
            sample = constant_input(float(radius), input_bound, horizon)
            lhs.append(left_side(self.beta_family, self.identity_family, self.identity_family, IDENTITY, IDENTITY,
                                 sample))
            rhs.append(self.result.right_side(sample, IDENTITY, IDENTITY))
            points.append((float(radius), input_bound, horizon))
        indices = {family_index(IDENTITY, IDENTITY, r, s) for r, s, _ in points}
        self.assertEqual(indices, {1, 2})
        self.assertTrue(certify(lhs, rhs, points, "grid uniform bound").passed)

    def test_decaying_factor_per_index(self):
        """Test beta_M <= gamma_hat1(M) beta_hat on the radius and time grids for every M."""
        r_mesh, t_mesh = np.meshgrid(value_grid(SAMPLES.radius), value_grid(SAMPLES.horizon), indexing="ij")
        for m in (1, 2, 3):
            with self.subTest(m=m):
                lhs = self.beta_family.member(m)(r_mesh, t_mesh)
                rhs = self.result.gamma_hat1(float(m)) * self.result.beta_hat(r_mesh, t_mesh)
                self.assertTrue(np.all(lhs <= rhs * (1 + 1e-6) + 1e-9))


if __name__ == "__main__":
    unittest.main()
