"""
Nonrelativistic (Pauli-type) mode functions and retarded Green functions.

Particles (+) carry the spin-up radial data of the sigma = +1 component,
antiparticles (-) the complex-conjugated sigma = -1 data; spin-down kinds
follow from phi -> -phi together with the species swap. Times are
tau = dx0/2M, the energies E = omega/2M.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

try:
    from .errors import AxisError, SupportError, ValidationError
    from .kernels import BesselSheet, ReducedCoordinates, guarded_sin, reduce, squeeze_scalar
    from .modes import (AXIS_CLEARANCE, Extension, FieldConfiguration, ModeIndex, SpacetimePoint, default_step,
                        derivative, omega_spectrum, potentials, radial_function, radial_order, second_derivative)
except ImportError:
    from errors import AxisError, SupportError, ValidationError
    from kernels import BesselSheet, ReducedCoordinates, guarded_sin, reduce, squeeze_scalar
    from modes import (AXIS_CLEARANCE, Extension, FieldConfiguration, ModeIndex, SpacetimePoint, default_step,
                       derivative, omega_spectrum, potentials, radial_function, radial_order, second_derivative)

logger = logging.getLogger(__name__)


class Species(Enum):
    PARTICLE = "particle"
    ANTIPARTICLE = "antiparticle"

    @property
    def sign(self) -> int:
        return 1 if self is Species.PARTICLE else -1

    def swapped(self) -> "Species":
        return Species.ANTIPARTICLE if self is Species.PARTICLE else Species.PARTICLE


class Spin(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class NonrelKind:
    species: Species = Species.PARTICLE
    spin: Spin = Spin.UP

    def __post_init__(self):
        try:
            object.__setattr__(self, "species", Species(self.species))
            object.__setattr__(self, "spin", Spin(self.spin))
        except ValueError as e:
            raise ValidationError(f"Unknown nonrelativistic kind ({self.species!r}, {self.spin!r})") from e

    def spin_up_equivalent(self) -> "NonrelKind":
        """Spin-up kind whose functions give this one after phi -> -phi."""
        if self.spin is Spin.UP:
            return self
        return NonrelKind(self.species.swapped(), Spin.UP)


def proper_tau(dx0: complex, M: float) -> complex:
    return dx0 / (2.0 * M)


def _check_support(tau: complex) -> complex:
    tau = complex(tau)
    if tau == 0:
        raise SupportError("The retarded Green function is not evaluated at tau = 0")
    if tau.imag == 0 and tau.real < 0:
        raise SupportError(f"Retarded support requires tau > 0, got {tau.real}")
    if tau.real < 0 or tau.imag > 0:
        raise SupportError(f"Complex tau must satisfy Re tau >= 0 and Im tau <= 0, got {tau}")
    return tau


def nonrel_energy(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension, kind: NonrelKind) -> float:
    """E = omega_{m,l,sigma}/2M with sigma = +1 for particles, -1 for antiparticles."""
    up = kind.spin_up_equivalent()
    return omega_spectrum(mode.with_sigma(up.species.sign), cfg, ext) / (2.0 * cfg.M)


def nonrel_mode(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension, kind: NonrelKind,
                p: SpacetimePoint) -> complex:
    """
    Schrodinger wavefunction e^{-iE x0} phi_{m,l}(x).

    Particle: sqrt(gamma/2pi) e^{i(l-l0-1)phi} I_{m+alpha,m}(rho) with sigma = +1 data.
    Antiparticle: sqrt(gamma/2pi) e^{-i(l-l0)phi} I_{m+alpha,m}(rho) with sigma = -1 data.

    Raises:
        AxisError: For an irregular mode at r = 0
    """
    up = kind.spin_up_equivalent()
    phi = p.phi if kind.spin is Spin.UP else -p.phi
    sigma = up.species.sign
    alpha = radial_order(mode.l, sigma, cfg, ext)
    rho = cfg.gamma * p.r ** 2 / 2.0
    try:
        radial = radial_function(mode.m, alpha, rho)
    except ValidationError as e:
        raise AxisError(f"Irregular nonrelativistic mode {mode} evaluated on the axis") from e
    winding = mode.l - cfg.l0 - (1 + sigma) // 2
    energy = nonrel_energy(mode, cfg, ext, kind)
    angular = np.exp(1j * sigma * winding * phi)
    return complex(math.sqrt(cfg.gamma / (2 * math.pi)) * np.exp(-1j * energy * p.x0) * angular * radial)


def _setup(rc: ReducedCoordinates, cfg: FieldConfiguration, tau: ArrayLike):
    tau_arr = np.asarray(tau, dtype=complex)
    theta = cfg.gamma * tau_arr
    sin_theta = guarded_sin(theta)
    prefactor = cfg.gamma / (4 * np.pi * sin_theta) * np.exp(
        0.5j * (np.asarray(rc.rho) + np.asarray(rc.rho_prime)) * np.cos(theta) / sin_theta)
    sheet = BesselSheet.build(theta, rc.rho, rc.rho_prime, sin_theta)
    return prefactor, sheet, cfg.eB * tau_arr


def nonrel_prefactor(rc: ReducedCoordinates, cfg: FieldConfiguration, tau: ArrayLike):
    """A_nr = gamma/(4 pi sin(gamma tau)) exp[(i/2)(rho + rho') cot(gamma tau)]."""
    return squeeze_scalar(_setup(rc, cfg, tau)[0])


def _spin_up_rc(rc: ReducedCoordinates, kind: NonrelKind) -> ReducedCoordinates:
    if kind.spin is Spin.UP:
        return rc
    return ReducedCoordinates(rc.rho, rc.rho_prime, -np.asarray(rc.dphi), rc.dx0, rc.dx3)


def nonrel_Sl(l: int, kind: NonrelKind, rc: ReducedCoordinates, cfg: FieldConfiguration,
              tau: ArrayLike, ext: Extension = Extension.MINUS_HALF_PI):
    """
    Per-l Green function

        S_l = A_nr e^{-+ i eB tau} e^{+- i (l_s - l0) dphi} e^{-i (l_s + mu) eB tau} e^{-i pi alpha/2} J_alpha(z),

    upper signs for particles, l_s = l - 1 (particle) or l (antiparticle).
    alpha = |l_s + mu| off the critical line; at l = 0 the extension fixes it.

    Raises:
        PoleError: At gamma tau = k pi
    """
    up = kind.spin_up_equivalent()
    rc = _spin_up_rc(rc, kind)
    sign = up.species.sign
    effective = Extension.MINUS_HALF_PI if cfg.mu == 0 else ext
    alpha = radial_order(l, sign, cfg, effective)
    l_s = l - (1 + sign) // 2
    prefactor, sheet, theta_b = _setup(rc, cfg, tau)
    phase = np.exp(-1j * sign * theta_b + 1j * sign * (l_s - cfg.l0) * np.asarray(rc.dphi)
                   - 1j * (l_s + cfg.mu) * theta_b - 0.5j * np.pi * alpha)
    return squeeze_scalar(prefactor * phase * sheet.j(alpha))


def nonrel_noncritical(kind: NonrelKind, rc: ReducedCoordinates, cfg: FieldConfiguration, tau: ArrayLike):
    """
    Closed l != 0 sums:

        (+): A_nr e^{-i l0 dphi} e^{-i(1+mu) eB tau} {e^{-i pi mu/2} J_mu
             - e^{-i dphi} e^{i eB tau} e^{-i pi(1-mu)/2} J_{1-mu}
             + Y(z, dphi - eB tau, mu) + Y(z, -dphi + eB tau, -mu)}
        (-): A_nr e^{i l0 dphi} e^{i(1-mu) eB tau} {Y(z, -dphi - eB tau, mu) + Y(z, dphi + eB tau, -mu)}
    """
    up = kind.spin_up_equivalent()
    rc = _spin_up_rc(rc, kind)
    mu = cfg.mu
    dphi = np.asarray(rc.dphi)
    prefactor, sheet, theta_b = _setup(rc, cfg, tau)
    if up.species is Species.PARTICLE:
        bracket = (np.exp(-0.5j * np.pi * mu) * sheet.j(mu)
                   - np.exp(-1j * dphi + 1j * theta_b - 0.5j * np.pi * (1 - mu)) * sheet.j(1 - mu)
                   + sheet.y_pair(dphi - theta_b, mu))
        value = prefactor * np.exp(-1j * cfg.l0 * dphi - 1j * (1 + mu) * theta_b) * bracket
    else:
        bracket = sheet.y_pair(-dphi - theta_b, mu)
        value = prefactor * np.exp(1j * cfg.l0 * dphi + 1j * (1 - mu) * theta_b) * bracket
    return squeeze_scalar(value)


def nonrel_critical(kind: NonrelKind, rc: ReducedCoordinates, cfg: FieldConfiguration, tau: ArrayLike,
                    ext: Extension = Extension.MINUS_HALF_PI):
    """The l = 0 part S_0, specific to the extension."""
    return nonrel_Sl(0, kind, rc, cfg, tau, ext)


def nonrel_retarded(kind: NonrelKind, rc: ReducedCoordinates, cfg: FieldConfiguration, tau: complex,
                    ext: Extension = Extension.MINUS_HALF_PI, l_window: Optional[int] = None):
    """
    Retarded Green function for tau > 0 (or complex tau in the closed lower-right quadrant).

    The closed noncritical sum plus S_0 by default; with l_window the
    truncated sum of S_l over |l| <= l_window instead.

    Raises:
        SupportError: Outside the retarded support
        PoleError: At gamma tau = k pi
    """
    tau = _check_support(tau)
    if l_window is not None:
        if l_window < 0:
            raise ValidationError(f"l_window must be nonnegative, got {l_window}")
        return sum(nonrel_Sl(l, kind, rc, cfg, tau, ext) for l in range(-l_window, l_window + 1))
    return nonrel_noncritical(kind, rc, cfg, tau) + nonrel_critical(kind, rc, cfg, tau, ext)


def schrodinger_residual(kind: NonrelKind, p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration,
                         tau: float, ext: Extension = Extension.MINUS_HALF_PI, step: Optional[float] = None) -> float:
    """
    Relative residual |i dG/dtau - H G| / |i dG/dtau| of the retarded function in x, with

        H = -laplacian +- 2i eA.grad + |eA|^2 +- eB    (upper signs for particles).

    Raises:
        ValidationError: For spin-down kinds
        AxisError: If the stencil reaches the axis
    """
    if kind.spin is not Spin.UP:
        raise ValidationError("The Schrodinger residual is evaluated for spin-up kinds")
    step = default_step(cfg, p) if step is None else step
    if p.r < AXIS_CLEARANCE * step:
        raise AxisError(f"Stencil at r={p.r} with step {step} reaches the solenoid axis")
    sign = kind.species.sign

    def field(q: SpacetimePoint, at: complex = tau):
        return nonrel_retarded(kind, reduce(q, p_prime, cfg), cfg, at, ext)

    center = field(p)
    gauge = potentials(cfg, p)
    laplacian = sum(second_derivative(field, p, axis, step, center) for axis in (1, 2))
    drift = sum(gauge[axis] * derivative(field, p, axis, step) for axis in (1, 2))
    hamiltonian = (-laplacian + 2j * sign * drift + (gauge[1] ** 2 + gauge[2] ** 2) * center
                   + sign * cfg.eB * center)

    h = 1e-3 * abs(tau)

    def central(width):
        return (field(p, tau + width) - field(p, tau - width)) / (2 * width)

    time_side = 1j * (4.0 * central(h / 2) - central(h)) / 3.0
    return float(abs(time_side - hamiltonian) / abs(time_side))


if __name__ == "__main__":
    demo = FieldConfiguration(eB=1.0, mu=0.3)
    rc_demo = ReducedCoordinates(rho=0.8, rho_prime=1.1, dphi=0.6)
    for species in Species:
        kind_demo = NonrelKind(species)
        closed = nonrel_retarded(kind_demo, rc_demo, demo, 0.4)
        summed = nonrel_retarded(kind_demo, rc_demo, demo, 0.4, l_window=40)
        print(f"{species.value:>12}: closed {closed:.12g}  l-sum {summed:.12g}")
