"""
Unit tests for the expression language.
"""

import math
import unittest

import numpy as np

from exceptions import SystemDefinitionError
from expression_dsl import compile_scalar, compile_vectorized, parse_expression


class TestParseExpression(unittest.TestCase):
    """Parsing into sympy trees and diagnostics."""

    def test_linear_expression_evaluates(self):
        """Test -x1 + u1 evaluates at floats."""
        expr = parse_expression("-x1 + u1", ["x1", "u1"])
        self.assertEqual(compile_scalar(expr, ["x1", "u1"])(2.0, 1.0), -1.0)

    def test_caret_is_power(self):
        """Test '^' parses as exponentiation."""
        expr = parse_expression("r^2", ["r"])
        self.assertEqual(compile_scalar(expr, ["r"])(3.0), 9.0)

    def test_constants_and_functions(self):
        """Test pi and the elementary functions are available."""
        expr = parse_expression("2*pi + sin(0) + sqrt(r) + tanh(0) + abs(-1)", ["r"])
        self.assertAlmostEqual(compile_scalar(expr, ["r"])(4.0), 2 * math.pi + 3.0)

    def test_unknown_identifier(self):
        """Test an undeclared name is reported with its column."""
        with self.assertRaises(SystemDefinitionError) as ctx:
            parse_expression("-y1", ["x1"], line=3)
        self.assertIn("unknown identifier 'y1'", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 3)
        self.assertEqual(ctx.exception.column, 2)

    def test_unexpected_character(self):
        """Test characters outside the grammar are rejected."""
        with self.assertRaises(SystemDefinitionError) as ctx:
            parse_expression("x1 $ 2", ["x1"])
        self.assertEqual(ctx.exception.column, 4)

    def test_double_star_is_not_power(self):
        """Test '**' is rejected at its column and '^' is suggested."""
        with self.assertRaises(SystemDefinitionError) as ctx:
            parse_expression("x1 ** 2", ["x1"])
        self.assertIn("use '^'", str(ctx.exception))
        self.assertEqual(ctx.exception.column, 4)
        with self.assertRaises(SystemDefinitionError) as ctx:
            parse_expression("x1**2", ["x1"], line=2, offset=5)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 8))

    def test_syntax_errors(self):
        """Test malformed expressions raise SystemDefinitionError."""
        for text in ["x1 +* 2", "x1 (", ""]:
            with self.subTest(text=text):
                with self.assertRaises(SystemDefinitionError):
                    parse_expression(text, ["x1"])

    def test_scientific_literal(self):
        """Test numbers with exponents are not mistaken for identifiers."""
        expr = parse_expression("1e-3*r", ["r"])
        self.assertAlmostEqual(compile_scalar(expr, ["r"])(2.0), 2e-3)


class TestCompileVectorized(unittest.TestCase):
    """numpy evaluation over arrays."""

    def test_array_evaluation(self):
        """Test r^2 over an array."""
        f = compile_vectorized(parse_expression("r^2", ["r"]), ["r"])
        np.testing.assert_allclose(f(np.array([1.0, 2.0, 3.0])), [1.0, 4.0, 9.0])

    def test_constant_broadcasts(self):
        """Test constant expressions keep the argument's shape."""
        f = compile_vectorized(parse_expression("1", ["r"]), ["r"])
        np.testing.assert_array_equal(f(np.array([1.0, 2.0])), [1.0, 1.0])

    def test_min_max(self):
        """Test min and max apply elementwise."""
        f = compile_vectorized(parse_expression("min(r, 1) + max(r, 2)", ["r"]), ["r"])
        np.testing.assert_allclose(f(np.array([0.5, 3.0])), [2.5, 4.0])


if __name__ == "__main__":
    unittest.main()
