"""
Tests for field configuration, spectra, mode functions and Dirac spinors.
"""

import math
import os
import sys
import unittest

import numpy as np
from scipy import integrate

# Add repository root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import AxisError, DimensionError, ValidationError
from src.modes import (SIGMA_1, Branch, Dimension, Extension, FieldConfiguration, GammaAlgebra, ModeIndex,
                       SpacetimePoint, dirac_operator, dirac_spinor, ladder_check, ladder_partner, ladder_spinor,
                       omega_spectrum, potentials, radial_function, scalar_mode, scalar_omega, spin_down_spinor,
                       squared_solution)


class TestFieldConfiguration(unittest.TestCase):
    """Parameter validation and derived quantities."""

    def test_derived_quantities(self):
        """gamma = |eB|, xi = sgn B, flux = l0 + mu."""
        cfg = FieldConfiguration(eB=-2.0, l0=3, mu=0.25)
        self.assertEqual(cfg.gamma, 2.0)
        self.assertEqual(cfg.xi, -1)
        self.assertEqual(cfg.flux, 3.25)

    def test_invalid_parameters(self):
        """Zero field, mu outside [0, 1), nonpositive mass are rejected."""
        with self.assertRaises(ValidationError):
            FieldConfiguration(eB=0.0)
        with self.assertRaises(ValidationError):
            FieldConfiguration(eB=1.0, mu=1.0)
        with self.assertRaises(ValidationError):
            FieldConfiguration(eB=1.0, M=0.0)
        with self.assertRaises(ValidationError):
            FieldConfiguration(eB=1.0, l0=0.5)

    def test_extension_parsing(self):
        """Aliases map onto the two extensions; anything else is rejected."""
        self.assertIs(Extension.parse("+pi/2"), Extension.PLUS_HALF_PI)
        self.assertIs(Extension.parse("minus"), Extension.MINUS_HALF_PI)
        with self.assertRaises(ValidationError):
            Extension.parse("pi/4")

    def test_gamma_algebra(self):
        """Gamma matrices satisfy the Clifford algebra in both dimensions."""
        for dim in Dimension:
            algebra = GammaAlgebra.for_dimension(dim)
            self.assertLess(algebra.anticommutator_residual(), 1e-15)
            self.assertEqual(algebra.size, dim.spinor_size)
            np.testing.assert_allclose(algebra.projector(1) + algebra.projector(-1), np.eye(algebra.size))


class TestSpectrum(unittest.TestCase):
    """Spectra of the squared Dirac equation."""

    def setUp(self):
        """Field with fractional flux."""
        self.cfg = FieldConfiguration(eB=1.0, mu=0.3)
        self.reversed = FieldConfiguration(eB=-1.0, mu=0.3)

    def test_zero_modes(self):
        """The critical component carries omega = 2 gamma m for the matching orientation."""
        self.assertEqual(omega_spectrum(ModeIndex(0, 0, -1), self.cfg, Extension.MINUS_HALF_PI), 0.0)
        self.assertEqual(omega_spectrum(ModeIndex(0, 0, 1), self.reversed, Extension.PLUS_HALF_PI), 0.0)
        self.assertAlmostEqual(omega_spectrum(ModeIndex(2, 0, -1), self.cfg, Extension.MINUS_HALF_PI), 4.0)

    def test_zero_appears_once_on_nonnegative_l(self):
        """On m, l in [0, 3] the only zero is (0, 0, -1) for B > 0, Theta = -pi/2."""
        zeros = [(m, l, sigma) for m in range(4) for l in range(4) for sigma in (-1, 1)
                 if omega_spectrum(ModeIndex(m, l, sigma), self.cfg, Extension.MINUS_HALF_PI) == 0]
        self.assertEqual(zeros, [(0, 0, -1)])

    def test_nonnegative(self):
        """omega >= 0 for both orientations and extensions."""
        for cfg in (self.cfg, self.reversed):
            for ext in Extension:
                for l in range(-4, 5):
                    for sigma in (-1, 1):
                        self.assertGreaterEqual(omega_spectrum(ModeIndex(0, l, sigma), cfg, ext), 0.0)

    def test_scalar_spectrum(self):
        """Klein-Gordon ground level gamma for l + mu < 0 at B > 0."""
        self.assertAlmostEqual(scalar_omega(0, -1, self.cfg), 1.0)
        self.assertAlmostEqual(scalar_omega(1, 2, self.cfg), 1.0 * (1 + 2 + 2.3 + 2.3))


class TestModeFunctions(unittest.TestCase):
    """Normalization, ladder relations and Dirac spinors."""

    def setUp(self):
        """Field, extension and an off-axis event."""
        self.cfg = FieldConfiguration(eB=1.0, mu=0.3)
        self.ext = Extension.MINUS_HALF_PI
        self.point = SpacetimePoint(0.2, 1.1, 0.4)

    def test_radial_normalization(self):
        """int |u|^2 r dr dphi = 1 for regular and irregular components."""
        for mode in (ModeIndex(1, 2, 1), ModeIndex(0, 0, -1), ModeIndex(2, 0, -1)):
            def density(r):
                value = squared_solution(mode, self.cfg, self.ext, SpacetimePoint(0.0, r, 0.0), Branch.PLUS)
                return 2 * math.pi * r * float(np.vdot(value, value).real)
            norm, _ = integrate.quad(density, 0.0, 12.0, limit=200)
            self.assertAlmostEqual(norm, 1.0, places=6)

    def test_alpha_minus_one_limit(self):
        """At alpha = -1 the radial function is -I_{m,m-1} and vanishes for m = 0."""
        self.assertEqual(radial_function(0, -1.0, 0.8), 0.0)
        self.assertAlmostEqual(radial_function(2, -1.0, 0.8), -radial_function(1, 1.0, 0.8), places=14)

    def test_ladder_relations(self):
        """Gamma P_perp u = c i sqrt(omega) u_partner holds to finite-difference accuracy."""
        for mode in (ModeIndex(1, 2, -1), ModeIndex(0, -1, 1), ModeIndex(2, 0, -1), ModeIndex(1, 0, 1)):
            for ext in Extension:
                self.assertLess(ladder_check(mode, self.cfg, ext, self.point), 1e-7)

    def test_partner_of_zero_mode(self):
        """The lowest level of sigma = -1, l < 0 has no partner."""
        partner, sign = ladder_partner(ModeIndex(0, -1, -1), self.cfg, self.ext)
        self.assertIsNone(partner)
        self.assertEqual(sign, -1)

    def test_ladder_spinor_matches_difference_spinor(self):
        """The analytic spinor equals N (Gamma P + M) u."""
        for mode in (ModeIndex(1, 2, -1), ModeIndex(0, 0, -1), ModeIndex(1, -3, -1)):
            for branch in Branch:
                exact = ladder_spinor(mode, self.cfg, self.ext, self.point, branch)
                stencil = dirac_spinor(mode, self.cfg, self.ext, self.point, branch)
                np.testing.assert_allclose(stencil, exact, atol=1e-8)

    def test_spinor_solves_dirac_equation(self):
        """(Gamma P - M) psi = 0 for both energy branches."""
        mode = ModeIndex(1, 1, -1)
        for branch in Branch:
            field = lambda q: ladder_spinor(mode, self.cfg, self.ext, q, branch)
            residual = dirac_operator(field, self.point, self.cfg, mass_sign=-1)
            self.assertLess(np.linalg.norm(residual) / np.linalg.norm(field(self.point)), 1e-7)

    def test_zero_mode_branches(self):
        """A zero mode has no positive-energy spinor; the negative branch is u itself."""
        mode = ModeIndex(0, 0, -1)
        np.testing.assert_array_equal(ladder_spinor(mode, self.cfg, self.ext, self.point, Branch.PLUS), np.zeros(2))
        np.testing.assert_allclose(ladder_spinor(mode, self.cfg, self.ext, self.point, Branch.MINUS),
                                   squared_solution(mode, self.cfg, self.ext, self.point, Branch.MINUS), atol=1e-15)

    def test_spin_down_spinor_solves_its_equation(self):
        """sigma1 psi^(-1) is annihilated by (Gamma P + M) for both branches."""
        mode = ModeIndex(1, 1, -1)
        for branch in Branch:
            field = lambda q: SIGMA_1 @ spin_down_spinor(mode, self.cfg, self.ext, q, branch)
            residual = dirac_operator(field, self.point, self.cfg, mass_sign=1)
            self.assertLess(np.linalg.norm(residual) / np.linalg.norm(field(self.point)), 1e-7)

    def test_spin_down_zero_mode_branches(self):
        """For the spin-down polarization a zero mode lives on the positive branch only."""
        mode = ModeIndex(0, 0, -1)
        u = squared_solution(mode, self.cfg, self.ext, self.point, Branch.PLUS)
        np.testing.assert_allclose(spin_down_spinor(mode, self.cfg, self.ext, self.point, Branch.PLUS),
                                   -SIGMA_1 @ u, atol=1e-15)
        np.testing.assert_array_equal(spin_down_spinor(mode, self.cfg, self.ext, self.point, Branch.MINUS),
                                      np.zeros(2))

    def test_ladder_spinor_needs_two_plus_one(self):
        """3+1 spinors are built by the stencil path only."""
        cfg = self.cfg.replace(dim=Dimension.D3PLUS1)
        with self.assertRaises(DimensionError):
            ladder_spinor(ModeIndex(1, 1, -1, 0.3), cfg, self.ext, self.point, Branch.PLUS)

    def test_three_plus_one_spinor_normalization(self):
        """Psi^dagger Psi integrates to 1/(2 pi) over the transverse plane per unit p3."""
        cfg = self.cfg.replace(dim=Dimension.D3PLUS1)
        mode = ModeIndex(1, 1, 1, 0.4)

        def density(r):
            value = dirac_spinor(mode, cfg, self.ext, SpacetimePoint(0.0, r, 0.0), Branch.PLUS)
            return 2 * math.pi * r * float(np.vdot(value, value).real)

        norm, _ = integrate.quad(density, 0.0, 10.0, limit=200)
        self.assertAlmostEqual(norm, 1.0 / (2 * math.pi), places=5)

    def test_scalar_mode_normalization(self):
        """Scalar modes are unit normalized."""
        def density(r):
            value = scalar_mode(1, -2, self.cfg, SpacetimePoint(0.0, r, 0.0))
            return 2 * math.pi * r * abs(value) ** 2
        norm, _ = integrate.quad(density, 0.0, 12.0, limit=200)
        self.assertAlmostEqual(norm, 1.0, places=7)


class TestGeometry(unittest.TestCase):
    """Points and potentials."""

    def test_shift_keeps_angle_continuous(self):
        """Shifting across the negative x axis keeps phi near the original representative."""
        p = SpacetimePoint(0.0, 1.0, math.pi - 1e-4)
        shifted = p.shifted(2, -0.01)
        self.assertGreater(shifted.phi, 3.0)
        self.assertAlmostEqual(shifted.cartesian()[2], p.cartesian()[2] - 0.01, places=14)

    def test_potential_singular_on_axis(self):
        """The solenoid potential is undefined at r = 0."""
        cfg = FieldConfiguration(eB=1.0, mu=0.3)
        with self.assertRaises(AxisError):
            potentials(cfg, SpacetimePoint(0.0, 0.0, 0.0))
        gauge = potentials(cfg, SpacetimePoint(0.0, 2.0, 0.0))
        self.assertAlmostEqual(gauge[2], -(0.3 + 2.0) / 2.0)

    def test_negative_radius_rejected(self):
        """r must be nonnegative."""
        with self.assertRaises(ValidationError):
            SpacetimePoint(0.0, -1.0, 0.0)


if __name__ == '__main__':
    unittest.main()
