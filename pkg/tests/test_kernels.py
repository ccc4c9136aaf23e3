"""
Tests for the closed-form proper-time kernels.
"""

import math
import os
import sys
import unittest

import numpy as np
from scipy import special

# Add repository root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import PoleError, ValidationError
from src.kernels import (BesselSheet, ReducedCoordinates, f_critical, f_noncritical, f_partial_wave, f_scalar,
                         f_scalar_partial_wave, f_total, f_uniform, guarded_sin, phi_factor, prefactor_A,
                         prefactor_D, prefactor_scalar, proper_time_sqrt, reduce, y_integral, y_series)
from src.modes import Dimension, Extension, FieldConfiguration, SpacetimePoint


class TestYFunction(unittest.TestCase):
    """Series and integral representations of Y(z, eta, mu)."""

    def test_series_matches_integral(self):
        """The adaptive series agrees with the ODE integral."""
        for z in (1.5 + 0.4j, 3.0 - 0.2j):
            for mu in (0.3, -0.3):
                series, tail = y_series(z, 0.7, mu)
                integral = y_integral(z, 0.7, mu, tol=1e-9)
                self.assertLess(abs(series - integral), 1e-8)
                self.assertLess(tail, 1e-12)

    def test_integer_flux_pair_is_plane_wave(self):
        """Y(z, eta, 0) + Y(z, -eta, 0) = e^{-i z cos eta} - J_0(z)."""
        z, eta = 2.0 + 0.5j, 0.9
        pair = y_series(z, eta, 0.0)[0] + y_series(z, -eta, 0.0)[0]
        expected = np.exp(-1j * z * np.cos(eta)) - special.jv(0, z)
        self.assertLess(abs(pair - expected), 1e-12)

    def test_partial_sum(self):
        """A fixed l_max returns the truncated sum."""
        value, _ = y_series(1.0 + 0.0j, 0.3, 0.3, l_max=1)
        expected = np.exp(0.3j) * np.exp(-0.5j * np.pi * 1.3) * special.jv(1.3, 1.0)
        self.assertAlmostEqual(value, expected, places=13)
        with self.assertRaises(ValidationError):
            y_series(1.0, 0.3, 0.3, l_max=0)

    def test_broadcasting(self):
        """Arrays of z and eta broadcast together."""
        values, tails = y_series(np.array([1.0 + 0.1j, 2.0 - 0.1j]), np.array([[0.2], [0.5]]), 0.3)
        self.assertEqual(values.shape, (2, 2))
        self.assertAlmostEqual(values[1, 0], y_series(1.0 + 0.1j, 0.5, 0.3)[0], places=13)


class TestPrefactors(unittest.TestCase):
    """Proper-time square root, poles and prefactors."""

    def setUp(self):
        """Field and reduced coordinates of a generic pair."""
        self.cfg = FieldConfiguration(eB=1.0, mu=0.3)
        self.rc = ReducedCoordinates(rho=1.0, rho_prime=1.0, dphi=0.7)

    def test_sqrt_on_negative_axis(self):
        """arg s = -pi on the negative real axis."""
        self.assertEqual(proper_time_sqrt(-4.0), -2j)
        self.assertAlmostEqual(proper_time_sqrt(4j), math.sqrt(2) * (1 + 1j), places=14)

    def test_pole_detection(self):
        """gamma s = k pi is refused."""
        with self.assertRaises(PoleError):
            guarded_sin(np.array(np.pi, dtype=complex))
        with self.assertRaises(PoleError):
            prefactor_A(np.pi, self.rc, self.cfg)

    def test_zero_proper_time(self):
        """s = 0 is not admissible."""
        with self.assertRaises(ValidationError):
            prefactor_A(0.0, self.rc, self.cfg)

    def test_prefactor_independent_of_mu(self):
        """A(s) carries l0 only."""
        other = self.cfg.replace(mu=0.8)
        self.assertEqual(prefactor_A(0.4 - 0.05j, self.rc, self.cfg), prefactor_A(0.4 - 0.05j, self.rc, other))

    def test_scalar_prefactor_dimensions(self):
        """D = 2 reduces to A(s); D < 2 and wrong separations are rejected."""
        s = 0.4 - 0.05j
        self.assertEqual(prefactor_scalar(s, self.rc, self.cfg), prefactor_A(s, self.rc, self.cfg))
        with self.assertRaises(ValidationError):
            prefactor_scalar(s, self.rc, self.cfg, D=1)
        with self.assertRaises(ValidationError):
            prefactor_scalar(s, self.rc, self.cfg, D=3, dx_extra=(0.1, 0.2))

    def test_three_plus_one_prefactor(self):
        """D/A = e^{-i pi/4}/(2 sqrt(pi s)) at dx0 = dx3 = 0."""
        s = 0.4 - 0.05j
        ratio = prefactor_D(s, self.rc, self.cfg) / prefactor_A(s, self.rc, self.cfg)
        expected = np.exp(-0.25j * np.pi) / (2 * math.sqrt(math.pi) * proper_time_sqrt(s))
        self.assertLess(abs(ratio - expected), 1e-13 * abs(expected))

    def test_no_winding_near_real_axis(self):
        """Just below the real axis the principal sheet is used."""
        sheet = BesselSheet.build(0.4 - 0.05j, 1.0, 1.0)
        self.assertEqual(int(sheet.winding), 0)

    def test_sqrt_above_negative_axis(self):
        """Above the negative axis the root continues from arg s = -pi, opposite to the principal root."""
        for s in (-4.0 + 1.0j, -0.3 + 0.02j):
            self.assertAlmostEqual(proper_time_sqrt(s), -np.sqrt(complex(s)), places=14)
        self.assertAlmostEqual(proper_time_sqrt(0.3 + 0.02j), np.sqrt(0.3 + 0.02j), places=14)

    def test_winding_in_upper_half_plane(self):
        """The continued Bessel argument stays on the principal sheet to the right and winds once to the left."""
        self.assertEqual(int(BesselSheet.build(0.4 + 0.05j, 1.0, 1.0).winding), 0)
        self.assertEqual(int(BesselSheet.build(-0.4 + 0.05j, 1.0, 1.0).winding), 1)


class TestKernels(unittest.TestCase):
    """Closed forms against partial-wave sums and the uniform-field limit."""

    def setUp(self):
        """Pinned proper time and a point pair off the solenoid."""
        self.cfg = FieldConfiguration(eB=1.0, mu=0.3)
        self.s = 0.4 - 0.05j
        self.rc = reduce(SpacetimePoint(0.0, 1.0, 0.7), SpacetimePoint(0.0, 1.0, 0.0), self.cfg)

    def test_partial_waves_sum_to_total(self):
        """sum_l f_l reproduces f_nc + f_0 for both extensions."""
        for ext in Extension:
            partial = sum(f_partial_wave(l, self.s, self.rc, self.cfg, ext) for l in range(-40, 41))
            np.testing.assert_allclose(partial, f_total(self.s, self.rc, self.cfg, ext), rtol=1e-10, atol=1e-13)

    def test_noncritical_excludes_l_zero(self):
        """f_nc is the sum over l != 0."""
        partial = sum(f_partial_wave(l, self.s, self.rc, self.cfg) for l in range(-40, 41) if l != 0)
        np.testing.assert_allclose(partial, f_noncritical(self.s, self.rc, self.cfg), rtol=1e-10, atol=1e-13)

    def test_critical_angular_factor(self):
        """On the critical line the extension picks J_{-mu} (Theta = -pi/2) or J_{mu} (Theta = +pi/2)."""
        mu = self.cfg.mu
        z = math.sqrt(self.rc.rho * self.rc.rho_prime) / np.sin(self.s)
        phase = np.exp(-1j * mu * self.s)
        expected = {Extension.MINUS_HALF_PI: phase * np.exp(0.5j * np.pi * mu) * special.jv(-mu, z),
                    Extension.PLUS_HALF_PI: phase * np.exp(-0.5j * np.pi * mu) * special.jv(mu, z)}
        for ext, value in expected.items():
            self.assertLess(abs(phi_factor(0, -1, self.s, self.rc, self.cfg, ext) - value), 1e-12 * abs(value))

    def test_critical_kernel_is_l_zero_wave(self):
        """f_0 is the l = 0 partial wave and completes f_nc to f_total."""
        for ext in Extension:
            critical = f_critical(self.s, self.rc, self.cfg, ext)
            np.testing.assert_allclose(critical, f_partial_wave(0, self.s, self.rc, self.cfg, ext), rtol=1e-14)
            np.testing.assert_allclose(f_noncritical(self.s, self.rc, self.cfg) + critical,
                                       f_total(self.s, self.rc, self.cfg, ext), rtol=1e-14)

    def test_integer_flux_limit(self):
        """At mu = 0 both extensions reduce to the uniform-field kernel."""
        cfg = self.cfg.replace(mu=0.0)
        uniform = f_uniform(self.s, self.rc, cfg)
        for ext in Extension:
            np.testing.assert_allclose(f_total(self.s, self.rc, cfg, ext), uniform, rtol=1e-10)

    def test_uniform_kernel_ignores_mu(self):
        """f_uniform does not depend on the fractional flux."""
        np.testing.assert_allclose(f_uniform(self.s, self.rc, self.cfg),
                                   f_uniform(self.s, self.rc, self.cfg.replace(mu=0.0)), rtol=1e-15)

    def test_extensions_differ_at_fractional_flux(self):
        """The critical wave distinguishes Theta = -pi/2 from +pi/2."""
        minus = f_total(self.s, self.rc, self.cfg, Extension.MINUS_HALF_PI)
        plus = f_total(self.s, self.rc, self.cfg, Extension.PLUS_HALF_PI)
        self.assertGreater(np.abs(minus - plus).max(), 1e-6)

    def test_scalar_partial_waves(self):
        """sum_l f_l^sc reproduces the closed scalar kernel."""
        partial = sum(f_scalar_partial_wave(l, self.s, self.rc, self.cfg) for l in range(-40, 41))
        self.assertLess(abs(partial - f_scalar(self.s, self.rc, self.cfg)), 1e-10 * abs(partial))

    def test_scalar_magnitude_ignores_l0(self):
        """The integer flux l0 enters the scalar kernel as a phase only."""
        reference = abs(f_scalar(self.s, self.rc, self.cfg))
        for l0 in (-2, 1, 3):
            self.assertAlmostEqual(abs(f_scalar(self.s, self.rc, self.cfg.replace(l0=l0))) / reference, 1.0, places=12)

    def test_scalar_orientation_symmetry(self):
        """Reversing B, dphi and the whole flux (l0 + mu -> -l0 - mu) leaves f^sc unchanged."""
        rc = ReducedCoordinates(rho=self.rc.rho, rho_prime=self.rc.rho_prime, dphi=0.7)
        flipped_rc = ReducedCoordinates(rho=self.rc.rho, rho_prime=self.rc.rho_prime, dphi=-0.7)
        for l0 in (0, 2):
            cfg = FieldConfiguration(eB=1.0, l0=l0, mu=0.3)
            flipped = FieldConfiguration(eB=-1.0, l0=-l0 - 1, mu=0.7)
            value = f_scalar(self.s, rc, cfg)
            self.assertLess(abs(f_scalar(self.s, flipped_rc, flipped) - value), 1e-10 * abs(value))

    def test_three_plus_one_layout(self):
        """3+1 kernels repeat the 2+1 diagonal on both spinor blocks."""
        cfg = self.cfg.replace(dim=Dimension.D3PLUS1)
        kernel = f_total(self.s, self.rc, cfg, Extension.MINUS_HALF_PI)
        self.assertEqual(kernel.shape, (4, 4))
        self.assertEqual(kernel[2, 2], kernel[0, 0])
        self.assertEqual(kernel[3, 3], kernel[1, 1])
        self.assertEqual(kernel[0, 1], 0)

    def test_array_proper_time(self):
        """Kernels broadcast over arrays of s."""
        s = np.array([0.3 - 0.05j, 0.6 - 0.05j])
        batch = f_total(s, self.rc, self.cfg, Extension.MINUS_HALF_PI)
        self.assertEqual(batch.shape, (2, 2, 2))
        np.testing.assert_allclose(batch[1], f_total(s[1], self.rc, self.cfg, Extension.MINUS_HALF_PI),
                                   rtol=1e-13)


if __name__ == '__main__':
    unittest.main()
