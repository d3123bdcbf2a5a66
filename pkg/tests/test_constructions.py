"""
Unit tests for the construct-and-certify factorizations and the uniform bound.
"""

import unittest

import mock
import numpy as np

from comparison_functions import (
    ComparisonFunction,
    FunctionClass,
    FunctionFamily,
    KLFunction,
    TwoArgFunction,
    asymptotic_gain_from_family,
    bound_family,
    certify,
    certify_kk,
    certify_product,
    factor_kk,
    factor_kl,
    factor_posdef,
    factor_product,
    family_max,
    two_arg_extend,
    uniformize,
)
from configuration import UniformizationSamples
from exceptions import ConstructionError, FamilyIndexError, PositiveDefinitenessError


def linear_family(size: int) -> FunctionFamily:
    return FunctionFamily.from_callable(lambda m: ComparisonFunction.linear(float(m)), size)


class TestFamilyMax(unittest.TestCase):
    """Running maxima of indexed families."""

    def test_max_of_linear_family(self):
        """Test max(r, 2r, 3r) at r=2."""
        self.assertAlmostEqual(family_max(linear_family(4), 3)(2.0), 6.0, places=9)

    def test_singleton(self):
        """Test M=1 returns the first member."""
        self.assertAlmostEqual(family_max(linear_family(4), 1)(5.0), 5.0, places=9)

    def test_mixed_members(self):
        """Test max(r, r^2) at r=0.5."""
        family = FunctionFamily((ComparisonFunction.identity(), ComparisonFunction.power(1.0, 2.0)))
        f = family_max(family, 2, grid=[0.5])
        self.assertEqual(f(0.5), 0.5)
        self.assertEqual(f.declared_class, FunctionClass.K_INF)

    def test_index_out_of_range(self):
        """Test M beyond the family size and empty families."""
        with self.assertRaises(FamilyIndexError):
            family_max(linear_family(2), 3)
        with self.assertRaises(ValueError):
            family_max(FunctionFamily(()), 1)


class TestTwoArgExtend(unittest.TestCase):
    """Interpolation of running maxima in the index argument."""

    def setUp(self):
        self.extension = two_arg_extend(linear_family(3), grid=[1.0, 3.0])

    def test_between_integers(self):
        """Test s=1.5 interpolates between the first two maxima."""
        self.assertAlmostEqual(self.extension(1.5, 1.0), 1.5)

    def test_below_one(self):
        """Test s in [0, 1] scales the first member."""
        self.assertAlmostEqual(self.extension(0.5, 1.0), 0.5)

    def test_integer_index(self):
        """Test integer s gives the running maximum."""
        self.assertAlmostEqual(self.extension(2.0, 3.0), 6.0)

    def test_exhausted_family(self):
        """Test s beyond the family size."""
        with self.assertRaises(FamilyIndexError):
            self.extension(4.0, 1.0)


class TestFactorizations(unittest.TestCase):
    """Certified product bounds."""

    def test_factor_kk_sum(self):
        """Test g(s, r) = s + r factors on [0.1, 10]^2."""
        grid = np.linspace(0.1, 10.0, 40)
        g = TwoArgFunction.from_expression("s + r")
        sigma, certificate = factor_kk(g, grid)
        self.assertTrue(certificate.passed)
        s, r = np.meshgrid(grid, grid, indexing="ij")
        self.assertTrue(np.all(s + r <= sigma(s) * sigma(r) * (1 + 1e-9)))
        self.assertTrue(certify_kk(g, sigma, grid).passed)

    def test_factor_product_exponential(self):
        """Test gamma(r) = e^r - 1 on [0, 5]^2."""
        grid = np.linspace(0.0, 5.0, 26)
        gamma = ComparisonFunction.exp_minus_one()
        sigma, certificate = factor_product(gamma, grid)
        self.assertTrue(certificate.passed)
        s, r = np.meshgrid(grid, grid, indexing="ij")
        self.assertTrue(np.all(gamma(s * r) <= sigma(s) * sigma(r) * (1 + 1e-6) + 1e-9))

    def test_factor_product_linear_is_exact(self):
        """Test gamma(r) = 4r gives sigma(r) = 2r."""
        sigma, certificate = factor_product(ComparisonFunction.linear(4.0), np.linspace(0.0, 3.0, 7))
        self.assertTrue(certificate.passed)
        self.assertAlmostEqual(sigma(1.5), 3.0)

    def test_certify_product_user_sigma(self):
        """Test sigma(r) = r certifies gamma(r) = r and sigma(r) = r/2 does not."""
        grid = np.linspace(0.0, 3.0, 13)
        identity = ComparisonFunction.identity()
        self.assertTrue(certify_product(identity, identity, grid).passed)
        failed = certify_product(identity, ComparisonFunction.linear(0.5), grid)
        self.assertFalse(failed.passed)
        self.assertLess(failed.worst_slack, -1.0)

    def test_factor_kl_product(self):
        """Test beta(r, t) = r^2 e^-2t gives theta2 = r^2 and theta1 = identity."""
        beta = KLFunction.product(ComparisonFunction.power(1.0, 2.0),
                                  ComparisonFunction.expression("exp(-2*r)", FunctionClass.L))
        theta1, theta2, certificate = factor_kl(beta, np.linspace(0.0, 3.0, 16), np.linspace(0.0, 5.0, 11))
        self.assertTrue(certificate.passed)
        self.assertEqual(theta1(2.0), 2.0)
        self.assertEqual(theta2(3.0), 9.0)

    def test_factor_kl_slow_decay(self):
        """Test r e^-t/2 needs the tabulated envelope."""
        beta = KLFunction.exponential(1.0, 0.5)
        r_grid, t_grid = np.linspace(0.0, 3.0, 16), np.linspace(0.0, 5.0, 11)
        theta1, theta2, certificate = factor_kl(beta, r_grid, t_grid)
        self.assertTrue(certificate.passed)
        r, t = np.meshgrid(r_grid, t_grid, indexing="ij")
        self.assertTrue(np.all(beta(r, t) <= theta1(theta2(r) * np.exp(-t)) + 1e-9))

    def test_factor_kl_composed(self):
        """Test composed KL functions return their own components."""
        theta1, theta2 = ComparisonFunction.linear(2.0), ComparisonFunction.power(1.0, 2.0)
        result = factor_kl(KLFunction.composed(theta1, theta2), np.linspace(0.0, 2.0, 5))
        self.assertIs(result.theta1, theta1)
        self.assertIs(result.theta2, theta2)
        self.assertTrue(result.certificate.passed)

    def test_factor_posdef_square(self):
        """Test rho(r) = r^2 falls back to the scaled running-minimum pair."""
        grid = np.linspace(0.0, 5.0, 51)
        rho = ComparisonFunction.power(1.0, 2.0)
        rho1, rho2, certificate, scale = factor_posdef(rho, grid)
        self.assertTrue(certificate.passed)
        self.assertEqual(scale, 1.0)
        self.assertIn("rho1 scale 1", certificate.label)
        self.assertEqual(rho2(0.0), 1.0)
        self.assertTrue(np.all(rho1(grid) * rho2(grid) <= rho(grid)))

    def test_factor_posdef_saturated(self):
        """Test rho(r) = min(r, 1) on [0, 100]."""
        grid = np.linspace(0.0, 100.0, 101)
        rho = ComparisonFunction.expression("min(r, 1)", FunctionClass.POSITIVE_DEFINITE)
        rho1, rho2, certificate, _ = factor_posdef(rho, grid)
        self.assertTrue(certificate.passed)
        self.assertEqual(rho1.declared_class, FunctionClass.K_INF)
        self.assertEqual(rho2.declared_class, FunctionClass.L)

    def test_factor_posdef_exact_pair(self):
        """Test rho(r) = r/(1+r^2) is reproduced exactly by (identity, rho(r)/r)."""
        rho = ComparisonFunction.expression("r/(1 + r^2)", FunctionClass.POSITIVE_DEFINITE)
        rho1, rho2, certificate, scale = factor_posdef(rho, np.linspace(0.0, 10.0, 101))
        self.assertEqual(scale, 1.0)
        self.assertTrue(certificate.passed)
        self.assertEqual(certificate.worst_slack, 0.0)
        self.assertEqual(rho1(3.0), 3.0)

    def test_factor_posdef_rejects_vanishing(self):
        """Test rho vanishing off the origin."""
        rho = ComparisonFunction.expression("max(r - 1, 0)", FunctionClass.POSITIVE_DEFINITE)
        with self.assertRaises(PositiveDefinitenessError):
            factor_posdef(rho, np.linspace(0.0, 3.0, 7))

    def test_factor_posdef_halvings_are_capped(self):
        """Test a budget of b halvings makes b + 1 attempts, then fails with the last certificate."""
        failing = certify([2.0], [1.0], [1.0], "rho1(r) rho2(r) <= rho(r)")
        rho = ComparisonFunction.power(1.0, 2.0)
        with mock.patch("comparison_functions.constructions.certify_posdef", return_value=failing) as check:
            with self.assertRaises(ConstructionError) as ctx:
                factor_posdef(rho, np.linspace(0.0, 5.0, 11), budget=3)
        self.assertEqual(check.call_count, 4)
        self.assertEqual([c.args[-1] for c in check.call_args_list], [1.0, 0.5, 0.25, 0.125])
        self.assertIs(ctx.exception.certificate, failing)

    def test_factor_posdef_reports_halved_scale(self):
        """Test the scale returned is the one whose certificate passed."""
        rho = ComparisonFunction.power(1.0, 2.0)
        grid = np.linspace(0.0, 5.0, 11)
        outcomes = iter([False, False, True])

        def check(rho, rho1, rho2, grid, tolerance, scale):
            return certify([0.0 if next(outcomes) else 2.0], [1.0], [1.0], f"rho1 scale {scale:.6g}")

        with mock.patch("comparison_functions.constructions.certify_posdef", side_effect=check):
            result = factor_posdef(rho, grid)
        self.assertEqual(result.scale, 0.25)
        self.assertEqual(result.certificate.label, "rho1 scale 0.25")
        np.testing.assert_allclose(result.rho1(grid), 0.25 * 0.5 * grid ** 2)


class TestBoundFamily(unittest.TestCase):
    """gamma_M(r) <= sigma(M) sigma(r) and its chain of links."""

    def test_power_family(self):
        """Test gamma_M(r) = r^M for M <= 4 on a 64-point grid over [0, 3]."""
        family = FunctionFamily.from_callable(lambda m: ComparisonFunction.power(1.0, float(m)), 4)
        bound = bound_family(family, np.linspace(0.0, 3.0, 64))
        self.assertTrue(bound.certificate.passed)
        self.assertGreaterEqual(bound.certificate.worst_slack, -1e-9)
        for name, link in bound.links.items():
            with self.subTest(link=name):
                self.assertTrue(link.passed)

    def test_linear_family_and_gain(self):
        """Test gamma_M(r) = M r and the derived asymptotic gain."""
        bound = bound_family(linear_family(3), np.linspace(0.0, 4.0, 17))
        self.assertTrue(bound.certificate.passed)
        gain = asymptotic_gain_from_family(bound)
        self.assertAlmostEqual(gain(1.0), bound.sigma(2.0) * bound.sigma(1.0))
        self.assertEqual(gain.declared_class, FunctionClass.K)


class TestUniformize(unittest.TestCase):
    """M-independent bound for families of estimates."""

    def setUp(self):
        self.beta_family = FunctionFamily.from_callable(lambda m: KLFunction.exponential(float(m)), 3)
        self.identity_family = FunctionFamily.constant(ComparisonFunction.identity(), 3)
        self.alpha = ComparisonFunction.identity()

    def test_master_inequality(self):
        """Test beta_M = M r e^-t with identity gains on 200 sampled tuples."""
        samples = UniformizationSamples(radius=1.0, input_bound=1.0, horizon=5.0, count=200, seed=0)
        result = uniformize(self.beta_family, self.identity_family, self.identity_family, self.alpha, self.alpha,
                            samples)
        self.assertTrue(result.certificate.passed)
        self.assertGreaterEqual(result.certificate.worst_slack, -1e-6)
        self.assertEqual(result.certificate.grid.size, 200)
        self.assertIn("decaying part", result.step_certificates)

    def test_family_too_short(self):
        """Test samples that need a member past the end of the families."""
        samples = UniformizationSamples(radius=3.0, input_bound=3.0, count=20)
        with self.assertRaises(FamilyIndexError):
            uniformize(self.beta_family, self.identity_family, self.identity_family, self.alpha, self.alpha,
                       samples)


if __name__ == "__main__":
    unittest.main()
