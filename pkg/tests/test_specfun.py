"""
Tests for the special-function layer.
"""

import os
import sys
import unittest

import mpmath
import numpy as np
from scipy import special

# Add repository root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import DomainError
from src.specfun import (LaguerreIndex, bessel_j, bessel_j_derivative, gamma_fn, laguerre_fn, laguerre_fn_table,
                         laguerre_poly, laguerre_table, log_gamma_fn)


class TestGamma(unittest.TestCase):
    """Gamma function against high-precision references."""

    def test_pinned_values(self):
        """Relative error below 1e-13 on pinned arguments."""
        for x in (0.5, 1.0, 4.3, 10.7, 0.013):
            reference = float(mpmath.gamma(x))
            self.assertLess(abs(gamma_fn(x) - reference) / reference, 1e-13)

    def test_log_gamma_large_argument(self):
        """log Gamma stays finite where Gamma overflows."""
        self.assertAlmostEqual(log_gamma_fn(400.3), float(mpmath.loggamma(400.3)), places=9)

    def test_rejects_nonpositive(self):
        """Gamma is defined here for x > 0 only."""
        with self.assertRaises(DomainError):
            gamma_fn(0.0)
        with self.assertRaises(ValueError):
            gamma_fn(-1.5)


class TestLaguerre(unittest.TestCase):
    """Laguerre polynomials and normalized Laguerre functions."""

    def test_polynomial_matches_mpmath(self):
        """Recurrence agrees with mpmath.laguerre."""
        for m, alpha, x in ((0, 0.3, 1.7), (5, 0.3, 1.7), (10, 2.5, 4.0), (7, -0.4, 0.9)):
            reference = float(mpmath.laguerre(m, alpha, x))
            self.assertAlmostEqual(laguerre_poly(m, alpha, x), reference, delta=1e-12 * max(1.0, abs(reference)))

    def test_table_matches_single_degrees(self):
        """One recurrence pass reproduces every degree."""
        x = np.array([0.2, 1.5, 3.0])
        table = laguerre_table(6, 1.3, x)
        for k in range(7):
            np.testing.assert_allclose(table[k], laguerre_poly(k, 1.3, x), rtol=1e-13)

    def test_orthonormality(self):
        """Gram matrix of I_{m+alpha,m} on [0, inf) is the identity for m <= 10."""
        for alpha in (0.3, -0.4, 2.0):
            nodes, weights = special.roots_genlaguerre(40, alpha)
            table = laguerre_fn_table(10, alpha, nodes)
            # remove the weight x^alpha e^{-x} carried by the quadrature rule
            gram = (table * weights * np.exp(nodes) * nodes ** (-alpha)) @ table.T
            np.testing.assert_allclose(gram, np.eye(11), atol=1e-8)

    def test_function_table_matches_single(self):
        """laguerre_fn_table agrees with laguerre_fn."""
        table = laguerre_fn_table(4, 0.7, 2.2)
        for m in range(5):
            self.assertAlmostEqual(table[m], laguerre_fn(LaguerreIndex(m, 0.7), 2.2), places=13)

    def test_irregular_function_at_origin(self):
        """Negative alpha diverges at x = 0."""
        with self.assertRaises(DomainError):
            laguerre_fn(LaguerreIndex(1, -0.4), 0.0)
        self.assertEqual(laguerre_fn(LaguerreIndex(2, 0.5), 0.0), 0.0)

    def test_index_validation(self):
        """m must be a nonnegative integer and alpha > -1."""
        with self.assertRaises(DomainError):
            LaguerreIndex(-1, 0.0)
        with self.assertRaises(DomainError):
            LaguerreIndex(2, -1.0)


class TestBessel(unittest.TestCase):
    """Bessel functions of complex argument."""

    def setUp(self):
        """Pinned complex arguments."""
        self.points = [1.5 + 0.7j, 0.3 - 2.0j, 12.0 + 0.1j]

    def test_matches_mpmath(self):
        """J_nu(z) against mpmath.besselj."""
        for nu in (0.3, -0.3, 1.7):
            for z in self.points:
                reference = complex(mpmath.besselj(nu, z))
                self.assertLess(abs(bessel_j(nu, z) - reference), 1e-12 * max(1.0, abs(reference)))

    def test_branch_cut_snaps_to_upper_side(self):
        """On the negative real axis J_nu(-x) = e^{i pi nu} J_nu(x)."""
        expected = np.exp(1j * np.pi * 0.3) * special.jv(0.3, 2.0)
        self.assertAlmostEqual(bessel_j(0.3, -2.0), expected, places=13)
        self.assertAlmostEqual(bessel_j(0.3, complex(-2.0, -1e-14)), expected, places=13)

    def test_broadcasting(self):
        """Orders and arguments broadcast together."""
        values = bessel_j(np.array([[0.5], [1.5]]), np.array([1.0, 2.0, 3.0]))
        self.assertEqual(values.shape, (2, 3))
        self.assertAlmostEqual(values[1, 2], special.jv(1.5, 3.0), places=13)

    def test_origin(self):
        """J_0(0) = 1, J_nu(0) = 0 for nu > 0, divergent for nu < 0."""
        self.assertEqual(bessel_j(0.0, 0.0), 1.0)
        self.assertEqual(bessel_j(0.4, 0.0), 0.0)
        with self.assertRaises(DomainError):
            bessel_j(-0.4, 0.0)

    def test_domain_limits(self):
        """Orders <= -1 and |z| above the bound are rejected."""
        with self.assertRaises(DomainError):
            bessel_j(-1.0, 1.0)
        with self.assertRaises(DomainError):
            bessel_j(0.5, 2000.0)

    def test_derivative_identity(self):
        """dJ/dz equals [J_{nu-1} - J_{nu+1}]/2 and mpmath's derivative."""
        for z in self.points:
            derivative = bessel_j_derivative(1.3, z)
            identity = 0.5 * (bessel_j(0.3, z) - bessel_j(2.3, z))
            self.assertLess(abs(derivative - identity), 1e-9 * max(1.0, abs(identity)))
            reference = complex(mpmath.besselj(1.3, z, derivative=1))
            self.assertLess(abs(derivative - reference), 1e-9 * max(1.0, abs(reference)))

    def test_wronskian(self):
        """J_nu J'_{-nu} - J'_nu J_{-nu} = -2 sin(nu pi)/(pi z)."""
        for nu in (0.3, 0.7):
            for z in self.points:
                wronskian = (bessel_j(nu, z) * bessel_j_derivative(-nu, z)
                             - bessel_j_derivative(nu, z) * bessel_j(-nu, z))
                expected = -2 * np.sin(nu * np.pi) / (np.pi * z)
                self.assertLess(abs(wronskian - expected), 1e-9 * max(1.0, abs(expected)))

    def test_derivative_shares_branch_and_origin(self):
        """The derivative follows bessel_j onto the cut and is finite at z = 0 for nu = 0 and nu >= 1."""
        on_cut = bessel_j_derivative(0.3, -2.0)
        expected = -np.exp(1j * np.pi * 0.3) * special.jvp(0.3, 2.0)
        self.assertAlmostEqual(on_cut, expected, places=12)
        self.assertEqual(bessel_j_derivative(0.0, 0.0), 0.0)
        self.assertEqual(bessel_j_derivative(1.0, 0.0), 0.5)
        self.assertEqual(bessel_j_derivative(2.5, 0.0), 0.0)
        with self.assertRaises(DomainError):
            bessel_j_derivative(0.4, 0.0)
        with self.assertRaises(DomainError):
            bessel_j_derivative(0.5, 2000.0)


if __name__ == '__main__':
    unittest.main()
