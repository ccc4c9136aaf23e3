"""
Independent verification paths for the closed forms.

Truncated mode sums (kernels, Delta^c in imaginary time, S^-+, the
nonrelativistic S_l), the Laguerre sum identity, bilinear relations of the
Dirac spinors, the scalar-spinor correspondence, and the registry of
pinned checks behind the `verify` command.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

try:
    from .errors import ConvergenceError, DimensionError, ValidationError
    from .kernels import (BesselSheet, ReducedCoordinates, f_partial_wave, f_scalar, f_scalar_partial_wave,
                          f_total, f_uniform, proper_time_sqrt, reduce, y_integral, y_series)
    from .modes import (Branch, Dimension, Extension, FieldConfiguration, GammaAlgebra, ModeIndex,
                        SpacetimePoint, dirac_operator, dirac_spinor, energy, ladder_partner, ladder_spinor,
                        omega_spectrum, radial_order, radial_table, scalar_omega, spectrum_offset,
                        spin_down_spinor, squared_solution)
    from .nonrel import (NonrelKind, Species, Spin, nonrel_energy, nonrel_mode, nonrel_retarded,
                         nonrel_critical, schrodinger_residual)
    from .proptime import (ContourSpec, MassSign, PropagatorField, apply_dirac_operator, dirac_residual,
                           integrate_anticausal, integrate_causal, spin_down_propagator)
    from .specfun import bessel_j, laguerre_fn_table
except ImportError:
    from errors import ConvergenceError, DimensionError, ValidationError
    from kernels import (BesselSheet, ReducedCoordinates, f_partial_wave, f_scalar, f_scalar_partial_wave,
                         f_total, f_uniform, proper_time_sqrt, reduce, y_integral, y_series)
    from modes import (Branch, Dimension, Extension, FieldConfiguration, GammaAlgebra, ModeIndex,
                       SpacetimePoint, dirac_operator, dirac_spinor, energy, ladder_partner, ladder_spinor,
                       omega_spectrum, radial_order, radial_table, scalar_omega, spectrum_offset,
                       spin_down_spinor, squared_solution)
    from nonrel import (NonrelKind, Species, Spin, nonrel_energy, nonrel_mode, nonrel_retarded,
                        nonrel_critical, schrodinger_residual)
    from proptime import (ContourSpec, MassSign, PropagatorField, apply_dirac_operator, dirac_residual,
                          integrate_anticausal, integrate_causal, spin_down_propagator)
    from specfun import bessel_j, laguerre_fn_table

logger = logging.getLogger(__name__)

# Largest last-term magnitude, relative to the closed value, accepted from a truncated sum.
TAIL_TOLERANCE = 1e-6


class Extrapolation(Enum):
    NONE = "none"
    TWO_POINT_LINEAR = "two_point_linear"


@dataclass(frozen=True)
class TruncationSpec:
    """
    Truncation of a mode sum.

    damping shifts s (or tau) by -i*damping, or multiplies each term by
    e^{-|eps| damping} where energies are summed; TWO_POINT_LINEAR combines
    2 f(d) - f(2d).
    """

    m_max: int = 300
    l_max: int = 40
    damping: float = 0.0
    extrapolation: Extrapolation = Extrapolation.NONE

    def __post_init__(self):
        for name in ("m_max", "l_max"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be an integer >= 1, got {value}")
        if not self.damping >= 0:
            raise ValidationError(f"damping must be nonnegative, got {self.damping}")
        try:
            object.__setattr__(self, "extrapolation", Extrapolation(self.extrapolation))
        except ValueError as e:
            raise ValidationError(f"Unknown extrapolation {self.extrapolation!r}") from e
        if self.extrapolation is Extrapolation.TWO_POINT_LINEAR and self.damping == 0:
            raise ValidationError("Two-point extrapolation needs a positive damping")

    def to_dict(self) -> Dict[str, Any]:
        return {"m_max": self.m_max, "l_max": self.l_max, "damping": self.damping,
                "extrapolation": self.extrapolation.value}


@dataclass
class CheckResult:
    check_id: str
    parameters: Dict[str, Any]
    residual: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"check-id": self.check_id, "parameters": self.parameters, "residual": self.residual,
                "tolerance": self.tolerance, "pass": self.passed}


def _relative(value, reference) -> float:
    scale = float(np.linalg.norm(np.atleast_1d(reference)))
    difference = float(np.linalg.norm(np.atleast_1d(np.asarray(value) - np.asarray(reference))))
    return difference / scale if scale > 0 else difference


def _extrapolated(partial: Callable[[float], Any], trunc: TruncationSpec):
    if trunc.extrapolation is Extrapolation.NONE:
        return partial(trunc.damping)
    return 2.0 * partial(trunc.damping) - partial(2.0 * trunc.damping)


def _mode_sum_prefactor(s: complex, rc: ReducedCoordinates, cfg: FieldConfiguration) -> complex:
    """e^{i pi/4} e^{-i M^2 s} e^{-i dx0^2/4s} / (2 sqrt(pi s))."""
    return complex(np.exp(0.25j * np.pi - 1j * cfg.M ** 2 * s - 1j * complex(rc.dx0) ** 2 / (4 * s))
                   / (2 * math.sqrt(math.pi) * proper_time_sqrt(s)))


# Mode sums ----------------------------------------------------------------------

def verify_sum_identity(alpha: float, rho: float, rho_prime: float, gamma_s: complex, m_max: int = 300) -> float:
    """
    Relative residual of

        sum_m e^{-2im gamma s} I_{m+alpha,m}(rho) I_{m+alpha,m}(rho')
          = exp{(i/2)(rho+rho') cot(gamma s)} e^{i(alpha+1) gamma s} e^{-i pi alpha/2} J_alpha(z) / (2i sin(gamma s)).

    Raises:
        ValidationError: Unless Im(gamma s) < 0
        ConvergenceError: If the last summand exceeds TAIL_TOLERANCE of the closed value
    """
    theta = complex(gamma_s)
    if not theta.imag < 0:
        raise ValidationError(f"The m-sum converges only for Im(gamma s) < 0, got {theta}")
    weights = np.exp(-2j * np.arange(m_max + 1) * theta)
    terms = weights * laguerre_fn_table(m_max, alpha, rho) * laguerre_fn_table(m_max, alpha, rho_prime)
    left = complex(terms.sum())
    sheet = BesselSheet.build(theta, rho, rho_prime)
    sin_theta = np.sin(theta)
    right = complex(np.exp(0.5j * (rho + rho_prime) * np.cos(theta) / sin_theta + 1j * (alpha + 1) * theta
                           - 0.5j * np.pi * alpha) * sheet.j(alpha) / (2j * sin_theta))
    tail = abs(terms[-1])
    if tail > TAIL_TOLERANCE * max(abs(right), 1e-300) and right != 0:
        raise ConvergenceError(f"Sum identity truncated at m_max={m_max} leaves a tail {tail:.3g}")
    return abs(left - right) / abs(right) if right != 0 else abs(left)


def _spin_coefficients(rc: ReducedCoordinates, cfg: FieldConfiguration, ext: Extension, trunc: TruncationSpec,
                       weight: Callable[[NDArray[np.float64]], NDArray]) -> Dict[int, complex]:
    """sum over l, m of (gamma/2pi) e^{i(l_s - l0) dphi} weight(omega) I(rho) I(rho') per sigma."""
    coefficients = {}
    m = np.arange(trunc.m_max + 1)
    for sigma in (1, -1):
        total = 0j
        for l in range(-trunc.l_max, trunc.l_max + 1):
            alpha = radial_order(l, sigma, cfg, ext)
            omega = 2.0 * cfg.gamma * (m + spectrum_offset(l, sigma, cfg, ext))
            radial = radial_table(trunc.m_max, alpha, rc.rho) * radial_table(trunc.m_max, alpha, rc.rho_prime)
            l_s = l - (1 + sigma) // 2
            total += np.exp(1j * (l_s - cfg.l0) * rc.dphi) * complex(np.sum(weight(omega) * radial))
        coefficients[sigma] = cfg.gamma / (2 * math.pi) * total
    return coefficients


def mode_sum_kernel(s: complex, rc: ReducedCoordinates, cfg: FieldConfiguration, ext: Extension,
                    trunc: TruncationSpec = TruncationSpec()) -> NDArray[np.complex128]:
    """
    2+1 kernel from its mode expansion,

        f = i pref(s) sum_{sigma,l,m} e^{-i omega s} (gamma/2pi) e^{i(l_s - l0) dphi} I(rho) I(rho') Xi_sigma.
    """
    if cfg.dim is not Dimension.D2PLUS1:
        raise DimensionError("Mode-sum kernels are built in 2+1 only")

    def partial(damping: float):
        shifted = complex(s) - 1j * damping
        c = _spin_coefficients(rc, cfg, ext, trunc, lambda omega: np.exp(-1j * omega * shifted))
        return 1j * _mode_sum_prefactor(shifted, rc, cfg) * np.diag([c[1], c[-1]])

    return _extrapolated(partial, trunc)


def mode_sum_scalar_kernel(s: complex, rc: ReducedCoordinates, cfg: FieldConfiguration,
                           trunc: TruncationSpec = TruncationSpec()) -> complex:
    """Klein-Gordon kernel i pref(s) sum e^{-i omega_sc s} (gamma/2pi) e^{i(l-l0) dphi} I I."""
    m = np.arange(trunc.m_max + 1)

    def partial(damping: float):
        shifted = complex(s) - 1j * damping
        total = 0j
        for l in range(-trunc.l_max, trunc.l_max + 1):
            alpha = abs(l + cfg.mu)
            omega = np.array([scalar_omega(int(k), l, cfg) for k in m])
            radial = laguerre_fn_table(trunc.m_max, alpha, rc.rho) * laguerre_fn_table(trunc.m_max, alpha, rc.rho_prime)
            total += np.exp(1j * (l - cfg.l0) * rc.dphi) * complex(np.sum(np.exp(-1j * omega * shifted) * radial))
        return 1j * _mode_sum_prefactor(shifted, rc, cfg) * cfg.gamma / (2 * math.pi) * total

    return _extrapolated(partial, trunc)


def mode_sum_delta(rc: ReducedCoordinates, cfg: FieldConfiguration, ext: Extension, euclidean_time: complex,
                   trunc: TruncationSpec = TruncationSpec()) -> NDArray[np.complex128]:
    """
    Delta^c at dx0 = -i*euclidean_time from the absolutely convergent sum
    i sum e^{-E delta}/(2E) phi Xi, E = sqrt(M^2 + omega). A complex
    euclidean_time with positive real part adds a real time offset.
    """
    if not complex(euclidean_time).real > 0:
        raise ValidationError(f"Imaginary-time separation must be positive, got {euclidean_time}")

    def weight(omega):
        eps = np.sqrt(cfg.M ** 2 + omega)
        return np.exp(-eps * euclidean_time) / (2 * eps)

    c = _spin_coefficients(rc, cfg, ext, trunc, weight)
    return 1j * np.diag([c[1], c[-1]])


def mode_sum_Smp(which: str, p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration,
                 ext: Extension, trunc: TruncationSpec = TruncationSpec(m_max=20, l_max=10), spin: int = 1
                 ) -> Tuple[NDArray[np.complex128], float]:
    """
    S^- = i sum +psi(x) +psibar(x') and S^+ = i sum -psi(x) -psibar(x') over
    m <= m_max, |l| <= l_max, with e^{-|eps| damping} on every term. spin = -1
    sums the spin-down spinors psi^(-1) instead.

    Returns:
        (value, tail) where tail is the largest term on the outermost m or l shell
    """
    branches = {"minus": Branch.PLUS, "plus": Branch.MINUS}
    if which not in branches:
        raise ValidationError(f"Expected 'minus' or 'plus', got {which!r}")
    if spin not in (1, -1):
        raise ValidationError(f"spin must be +1 or -1, got {spin}")
    if cfg.dim is not Dimension.D2PLUS1:
        raise DimensionError("mode_sum_Smp is defined for 2+1 only")
    branch = branches[which]
    spinor = ladder_spinor if spin == 1 else spin_down_spinor
    gamma0 = GammaAlgebra.for_dimension(cfg.dim).gammas[0]

    def partial(damping: float):
        total = np.zeros((2, 2), dtype=complex)
        shell = 0.0
        for l in range(-trunc.l_max, trunc.l_max + 1):
            for m in range(trunc.m_max + 1):
                mode = ModeIndex(m, l, -1)
                eps = energy(omega_spectrum(mode, cfg, ext), None, cfg.M, branch)
                psi = spinor(mode, cfg, ext, p, branch)
                psi_prime = spinor(mode, cfg, ext, p_prime, branch)
                term = 1j * math.exp(-abs(eps) * damping) * np.outer(psi, psi_prime.conj()) @ gamma0
                total += term
                if m == trunc.m_max or abs(l) == trunc.l_max:
                    shell = max(shell, float(np.abs(term).max()))
        return total, shell

    if trunc.extrapolation is Extrapolation.NONE:
        value, tail = partial(trunc.damping)
    else:
        first, tail = partial(trunc.damping)
        second, _ = partial(2.0 * trunc.damping)
        value = 2.0 * first - second
    if tail > TAIL_TOLERANCE * max(float(np.abs(value).max()), 1e-300):
        logger.warning("S^%s mode sum: outermost shell still contributes %.3g", which[0], tail)
    return value, tail


def mode_sum_nonrel(l: int, kind: NonrelKind, p: SpacetimePoint, p_prime: SpacetimePoint,
                    cfg: FieldConfiguration, ext: Extension, tau: complex,
                    trunc: TruncationSpec = TruncationSpec(m_max=200)) -> complex:
    """i sum_m e^{-i omega tau} phi_{m,l}(x) phi*_{m,l}(x') with omega = 2M E."""
    here = SpacetimePoint(0.0, p.r, p.phi, p.x3)
    there = SpacetimePoint(0.0, p_prime.r, p_prime.phi, p_prime.x3)

    def partial(damping: float):
        shifted = complex(tau) - 1j * damping
        total = 0j
        for m in range(trunc.m_max + 1):
            mode = ModeIndex(m, l, 1)
            omega = 2.0 * cfg.M * nonrel_energy(mode, cfg, ext, kind)
            total += (np.exp(-1j * omega * shifted) * nonrel_mode(mode, cfg, ext, kind, here)
                      * nonrel_mode(mode, cfg, ext, kind, there).conjugate())
        return 1j * total

    return complex(_extrapolated(partial, trunc))


# Relations --------------------------------------------------------------------

def verify_bilinear(m: int, l: int, cfg: FieldConfiguration, ext: Extension, p: SpacetimePoint,
                    p_prime: SpacetimePoint, branch: Branch, p3: Optional[float] = None,
                    step: Optional[float] = None) -> float:
    """
    Relative residual of the bilinear relation

        psi(x) psibar(x') = (gamma P + M) (1/2 eps) [u_{m,l,-1}(x) u*_{m,l,-1}(x') + u_p(x) u*_p(x')]

    with u_p the ladder partner (3+1: both members of the pair on the left,
    Sigma^3-doubled bilinear times the x3 plane wave on the right).

    Raises:
        ValidationError: For omega = 0 (|eps| = M)
    """
    base = ModeIndex(m, l, -1, p3)
    omega = omega_spectrum(base, cfg, ext)
    if omega == 0:
        raise ValidationError(f"Bilinear relation requires |eps| != M; mode {base} has omega = 0")
    eps = energy(omega, p3, cfg.M, branch)
    partner, _ = ladder_partner(base, cfg, ext)
    pair = [base, partner]
    gamma0 = GammaAlgebra.for_dimension(cfg.dim).gammas[0]
    conj_prime = [squared_solution(mode, cfg, ext, p_prime, branch).conj() for mode in pair]

    def transverse(q: SpacetimePoint) -> NDArray:
        return sum(np.outer(squared_solution(mode, cfg, ext, q, branch), c) for mode, c in zip(pair, conj_prime))

    if cfg.dim is Dimension.D2PLUS1:
        left = np.outer(dirac_spinor(base, cfg, ext, p, branch, step),
                        dirac_spinor(base, cfg, ext, p_prime, branch, step).conj()) @ gamma0
        right = dirac_operator(lambda q: transverse(q) / (2 * eps), p, cfg, step=step)
        return _relative(left, right)

    if p3 is None:
        raise DimensionError("3+1 bilinears need p3")
    left = sum(np.outer(dirac_spinor(mode, cfg, ext, p, branch, step),
                        dirac_spinor(mode, cfg, ext, p_prime, branch, step).conj()) for mode in pair) @ gamma0

    def doubled(q: SpacetimePoint) -> NDArray:
        block = transverse(q)
        zero = np.zeros_like(block)
        wave = np.exp(-1j * p3 * (q.x3 - p_prime.x3)) / (2 * math.pi)
        return np.block([[block, zero], [zero, block]]) * wave / (2 * eps)

    right = dirac_operator(doubled, p, cfg, step=step)
    return _relative(left, right)


def verify_scalar_correspondence(l: int, s: complex, rc: ReducedCoordinates, cfg: FieldConfiguration,
                                 ext: Extension = Extension.PLUS_HALF_PI) -> float:
    """
    Relative residual between the scalar partial wave f_l^sc and the Xi_-1
    coefficient of the spinor f_l with the Zeeman factor e^{i eBs} removed.
    At l = 0 the comparison holds for Theta = +pi/2 only.
    """
    spinor = f_partial_wave(l, s, rc, cfg, ext, Dimension.D2PLUS1)[..., 1, 1]
    stripped = spinor * np.exp(-1j * cfg.eB * complex(s))
    return _relative(stripped, f_scalar_partial_wave(l, s, rc, cfg))


# Check registry -------------------------------------------------------------------

DEFAULT_TOLERANCES: Dict[str, float] = {
    "sum-identity": 1e-8,
    "y-equivalence": 1e-10,
    "y-ode": 1e-8,
    "kernel-mode-sum": 1e-6,
    "uniform-limit": 1e-6,
    "scalar-correspondence": 1e-10,
    "bilinear": 1e-4,
    "delta-mode-sum": 1e-4,
    "contour-independence": 1e-6,
    "causality": 1e-6,
    "dirac-residual": 1e-3,
    "nonrel-closed-sums": 1e-8,
    "nonrel-schrodinger": 1e-5,
    "nonrel-initial-condition": 1e-3,
    "nonrel-s0-behaviour": 1.0,
    "spin-down-mode-sum": 1e-3,
    "smp-dirac-route": 1e-3,
    "smp-anticommutator": 0.9,
}

PINNED_S = 0.4 - 0.05j
PINNED_POINTS = [(1.0, 1.0, 0.7), (0.5, 2.0, -1.2), (1.5, 0.8, 2.5)]
# Spacelike pair with a mild cancellation factor near s = 0.
SPACELIKE_PAIR = (SpacetimePoint(0.0, 1.5, 0.5), SpacetimePoint(0.0, 0.6, 0.0))
EUCLIDEAN_PAIR = (SpacetimePoint(0.0, 1.2, 0.7), SpacetimePoint(0.0, 0.8, 0.0))
PROPAGATOR_CASES = [(0.3, Extension.MINUS_HALF_PI), (0.3, Extension.PLUS_HALF_PI), (0.0, Extension.MINUS_HALF_PI)]


def _result(check_id: str, parameters: Dict[str, Any], residual: float, tolerance: float) -> CheckResult:
    return CheckResult(check_id, parameters, float(residual), tolerance, bool(residual <= tolerance))


def _check_sum_identity(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    results = []
    for alpha in (0.3, 1.3, 2.7):
        for rho in (0.5, 1.0, 2.0):
            for rho_prime in (0.5, 1.0, 2.0):
                residual = verify_sum_identity(alpha, rho, rho_prime, PINNED_S, trunc.m_max)
                results.append(_result("sum-identity", {"alpha": alpha, "rho": rho, "rho_prime": rho_prime,
                                                        "gamma_s": str(PINNED_S), "m_max": trunc.m_max},
                                       residual, tolerance))
    return results


def _check_y_equivalence(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    results = []
    for z in (0.5, 1.5 + 0.5j, 2.0 - 1.0j):
        for eta in (-1.0, 0.5, 2.0):
            for mu in (0.1, 0.3, 0.7):
                series, _ = y_series(z, eta, mu)
                residual = abs(series - y_integral(z, eta, mu)) / max(1.0, abs(series))
                results.append(_result("y-equivalence", {"z": str(complex(z)), "eta": eta, "mu": mu},
                                       residual, tolerance))
    return results


def y_ode_residual(z: complex, eta: float, mu: float, h: float = 1e-3) -> float:
    """|dY/dz + i cos(eta) Y - (1/2)(-i)^mu [-i e^{i eta} J_mu + J_{1+mu}]|, derivative by differences."""
    def value(point):
        return y_series(point, eta, mu)[0]

    def central(step):
        return (value(z + step) - value(z - step)) / (2 * step)

    derivative = (4.0 * central(h / 2) - central(h)) / 3.0
    source = 0.5 * np.exp(-0.5j * np.pi * mu) * (-1j * np.exp(1j * eta) * bessel_j(mu, z) + bessel_j(1 + mu, z))
    residual = derivative + 1j * math.cos(eta) * value(z) - source
    return abs(residual) / max(1.0, abs(derivative))


def _check_y_ode(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    return [_result("y-ode", {"z": str(complex(z)), "eta": 0.5, "mu": 0.3}, y_ode_residual(z, 0.5, 0.3), tolerance)
            for z in (0.7, 1.2 - 0.4j, 2.5 + 0.3j)]


def _check_kernel_mode_sum(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    results = []
    for eB, l0 in ((1.0, 0), (-1.0, 1)):
        cfg = FieldConfiguration(eB=eB, l0=l0, mu=0.3)
        for rho, rho_prime, dphi in PINNED_POINTS:
            rc = ReducedCoordinates(rho, rho_prime, dphi)
            parameters = {"eB": eB, "l0": l0, "mu": 0.3, "rho": rho, "rho_prime": rho_prime, "dphi": dphi,
                          "s": str(PINNED_S)}
            for ext in Extension:
                residual = _relative(f_total(PINNED_S, rc, cfg, ext), mode_sum_kernel(PINNED_S, rc, cfg, ext, trunc))
                results.append(_result("kernel-mode-sum", {**parameters, "extension": ext.value}, residual, tolerance))
            residual = _relative(f_scalar(PINNED_S, rc, cfg), mode_sum_scalar_kernel(PINNED_S, rc, cfg, trunc))
            results.append(_result("kernel-mode-sum", {**parameters, "field": "scalar"}, residual, tolerance))
    return results


def _check_uniform_limit(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    cfg = FieldConfiguration(eB=1.0, mu=1e-8)
    points = PINNED_POINTS + [(0.3, 0.3, 0.0), (2.0, 1.0, 3.0)]
    results = []
    for rho, rho_prime, dphi in points:
        rc = ReducedCoordinates(rho, rho_prime, dphi)
        uniform = f_uniform(PINNED_S, rc, cfg)
        for ext in Extension:
            residual = np.abs(f_total(PINNED_S, rc, cfg, ext) - uniform).max() / np.abs(uniform).max()
            results.append(_result("uniform-limit", {"rho": rho, "rho_prime": rho_prime, "dphi": dphi,
                                                     "mu": 1e-8, "extension": ext.value}, residual, tolerance))
    return results


def _check_scalar_correspondence(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    cfg = FieldConfiguration(eB=1.0, mu=0.3)
    rc = ReducedCoordinates(1.0, 1.0, 0.7)
    results = []
    for l in range(-10, 11):
        residual = verify_scalar_correspondence(l, PINNED_S, rc, cfg, Extension.PLUS_HALF_PI)
        results.append(_result("scalar-correspondence", {"l": l, "extension": "+pi/2"}, residual, tolerance))
    # the attractive extension must not reproduce the scalar l = 0 wave
    mismatch = verify_scalar_correspondence(0, PINNED_S, rc, cfg, Extension.MINUS_HALF_PI)
    results.append(CheckResult("scalar-correspondence", {"l": 0, "extension": "-pi/2", "expect": "mismatch"},
                               float(mismatch), 0.1, bool(mismatch >= 0.1)))
    return results


BILINEAR_CASES_2D = [(1, 2, Extension.MINUS_HALF_PI, 1.0, Branch.PLUS),
                     (1, -1, Extension.MINUS_HALF_PI, 1.0, Branch.MINUS),
                     (0, 1, Extension.PLUS_HALF_PI, 1.0, Branch.PLUS),
                     (2, 0, Extension.MINUS_HALF_PI, -1.0, Branch.MINUS),
                     (1, 0, Extension.PLUS_HALF_PI, -1.0, Branch.PLUS),
                     (0, -2, Extension.PLUS_HALF_PI, -1.0, Branch.MINUS)]
BILINEAR_CASES_3D = [(1, 1, Extension.MINUS_HALF_PI, 1.0, Branch.PLUS, 0.4),
                     (1, -1, Extension.PLUS_HALF_PI, 1.0, Branch.MINUS, -0.3),
                     (1, 0, Extension.MINUS_HALF_PI, -1.0, Branch.PLUS, 0.7),
                     (0, 2, Extension.PLUS_HALF_PI, -1.0, Branch.MINUS, 0.2)]
BILINEAR_POINTS = (SpacetimePoint(0.3, 1.1, 0.4, 0.2), SpacetimePoint(-0.2, 0.9, -0.5, -0.1))


def _check_bilinear(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = BILINEAR_POINTS
    results = []
    for m, l, ext, eB, branch in BILINEAR_CASES_2D:
        cfg = FieldConfiguration(eB=eB, mu=0.3)
        residual = verify_bilinear(m, l, cfg, ext, p, p_prime, branch)
        results.append(_result("bilinear", {"dim": "2+1", "m": m, "l": l, "extension": ext.value, "eB": eB,
                                            "branch": branch.value}, residual, tolerance))
    for m, l, ext, eB, branch, p3 in BILINEAR_CASES_3D:
        cfg = FieldConfiguration(eB=eB, mu=0.3, dim=Dimension.D3PLUS1)
        residual = verify_bilinear(m, l, cfg, ext, p, p_prime, branch, p3=p3)
        results.append(_result("bilinear", {"dim": "3+1", "m": m, "l": l, "extension": ext.value, "eB": eB,
                                            "branch": branch.value, "p3": p3}, residual, tolerance))
    return results


def _check_delta_mode_sum(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = EUCLIDEAN_PAIR
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)
        rc = reduce(p, p_prime, cfg, time_shift=-1.0j)
        contour_value = integrate_causal(rc, cfg, ext).value
        residual = _relative(contour_value, mode_sum_delta(rc, cfg, ext, 1.0, trunc))
        results.append(_result("delta-mode-sum", {"mu": mu, "extension": ext.value, "euclidean_time": 1.0},
                               residual, tolerance))
    return results


def _check_contour_independence(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = SPACELIKE_PAIR
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)
        rc = reduce(p, p_prime, cfg)
        for integrate in (integrate_causal, integrate_anticausal):
            first = integrate(rc, cfg, ext, contour=ContourSpec(theta=0.3)).value
            second = integrate(rc, cfg, ext, contour=ContourSpec(theta=0.5)).value
            results.append(_result("contour-independence",
                                   {"mu": mu, "extension": ext.value, "integral": integrate.__name__,
                                    "theta": [0.3, 0.5]}, _relative(first, second), tolerance))
    return results


def _check_causality(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = SPACELIKE_PAIR
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)
        rc = reduce(p, p_prime, cfg)
        causal = integrate_causal(rc, cfg, ext).value
        anticausal = integrate_anticausal(rc, cfg, ext).value
        results.append(_result("causality", {"mu": mu, "extension": ext.value},
                               _relative(anticausal, causal), tolerance))
    return results


def _check_dirac_residual(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = EUCLIDEAN_PAIR
    cfg = FieldConfiguration(eB=1.0, mu=0.3)
    residual = dirac_residual(p, p_prime, cfg, Extension.MINUS_HALF_PI, time_shift=-1.0j)
    return [_result("dirac-residual", {"mu": 0.3, "extension": "-pi/2", "euclidean_time": 1.0},
                    residual, tolerance)]


# Spinor mode sums converge on e^{-|eps| damping}; independent of the suite truncation.
SMP_TRUNCATION = TruncationSpec(m_max=120, l_max=15, damping=1.0)
ANTICOMMUTATOR_RADII = (1.2, 1.8, 2.4)


def _check_spin_down_mode_sum(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = EUCLIDEAN_PAIR
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)
        field = PropagatorField(p_prime, cfg, ext, time_shift=-1.0j * SMP_TRUNCATION.damping)
        contour_value = spin_down_propagator(field, p, cfg)
        mode_value, _ = mode_sum_Smp("minus", p, p_prime, cfg, ext, SMP_TRUNCATION, spin=-1)
        results.append(_result("spin-down-mode-sum", {"mu": mu, "extension": ext.value, "euclidean_time": 1.0},
                               _relative(contour_value, mode_value), tolerance))
    return results


def _check_smp_dirac_route(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p, p_prime = EUCLIDEAN_PAIR
    T = SMP_TRUNCATION.damping
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)

        def delta_field(q: SpacetimePoint) -> NDArray:
            return mode_sum_delta(reduce(q, p_prime, cfg), cfg, ext, T + 1j * (q.x0 - p_prime.x0), trunc)

        routed = apply_dirac_operator(delta_field, p, cfg, MassSign.PLUS_M)
        spinor_sum, _ = mode_sum_Smp("minus", p, p_prime, cfg, ext, SMP_TRUNCATION)
        results.append(_result("smp-dirac-route", {"mu": mu, "extension": ext.value, "euclidean_time": T},
                               _relative(spinor_sum, routed), tolerance))
    return results


def _check_smp_anticommutator(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    p_prime = SpacetimePoint(0.0, 0.8, 0.0)
    results = []
    for mu, ext in PROPAGATOR_CASES:
        cfg = FieldConfiguration(eB=1.0, mu=mu)
        norms = []
        for r in ANTICOMMUTATOR_RADII:
            p = SpacetimePoint(0.0, r, 0.0)
            total = sum(mode_sum_Smp(which, p, p_prime, cfg, ext, SMP_TRUNCATION)[0] for which in ("minus", "plus"))
            norms.append(float(np.linalg.norm(total)))
        ratio = max(later / earlier for earlier, later in zip(norms, norms[1:]))
        parameters = {"mu": mu, "extension": ext.value, "r": list(ANTICOMMUTATOR_RADII),
                      "damping": SMP_TRUNCATION.damping}
        results.append(_result("smp-anticommutator", parameters, ratio, tolerance))
    return results


NONREL_KINDS = [NonrelKind(species, spin) for species in Species for spin in Spin]


def _check_nonrel_closed_sums(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    rc = ReducedCoordinates(0.8, 1.1, 0.6)
    results = []
    for eB in (1.0, -1.0):
        cfg = FieldConfiguration(eB=eB, mu=0.3)
        for kind in NONREL_KINDS:
            closed = nonrel_retarded(kind, rc, cfg, 0.4)
            summed = nonrel_retarded(kind, rc, cfg, 0.4, l_window=trunc.l_max)
            results.append(_result("nonrel-closed-sums", {"eB": eB, "species": kind.species.value,
                                                          "spin": kind.spin.value, "tau": 0.4},
                                   _relative(closed, summed), tolerance))
    return results


def _check_nonrel_schrodinger(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    cfg = FieldConfiguration(eB=1.0, mu=0.3)
    p, p_prime = SpacetimePoint(0.0, 1.1, 0.3), SpacetimePoint(0.0, 0.9, -0.4)
    results = []
    for species in Species:
        kind = NonrelKind(species)
        residual = schrodinger_residual(kind, p, p_prime, cfg, 0.4, Extension.MINUS_HALF_PI)
        results.append(_result("nonrel-schrodinger", {"species": species.value, "tau": 0.4}, residual, tolerance))
    return results


def initial_condition_integral(kind: NonrelKind, center: Tuple[float, float], width: float,
                               cfg: FieldConfiguration, ext: Extension, T: float, nodes: int = 64) -> complex:
    """
    int S(x, -iT; x') g(x') d^2x' for a unit Gaussian g of the given width
    centered at x, on a tensor Gauss-Legendre grid of half-width 7 sqrt(2T).
    """
    half = 7.0 * math.sqrt(2.0 * T)
    t, w = np.polynomial.legendre.leggauss(nodes)
    xs = center[0] + half * t
    ys = center[1] + half * t
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
    weights = np.outer(w, w) * half ** 2
    r = math.hypot(*center)
    phi = math.atan2(center[1], center[0])
    r_prime = np.hypot(grid_x, grid_y)
    phi_prime = np.arctan2(grid_y, grid_x)
    rc = ReducedCoordinates(rho=cfg.gamma * r ** 2 / 2, rho_prime=cfg.gamma * r_prime ** 2 / 2, dphi=phi - phi_prime)
    kernel = nonrel_retarded(kind, rc, cfg, -1j * T, ext)
    gaussian = np.exp(-((grid_x - center[0]) ** 2 + (grid_y - center[1]) ** 2) / (2 * width ** 2))
    return complex(np.sum(weights * kernel * gaussian))


def _check_nonrel_initial_condition(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    cfg = FieldConfiguration(eB=1.0, mu=0.3)
    kind = NonrelKind(Species.PARTICLE)
    values = [initial_condition_integral(kind, (1.5, 0.0), 0.6, cfg, Extension.MINUS_HALF_PI, T)
              for T in (0.02, 0.01, 0.005)]
    extrapolated = (8 * values[2] - 6 * values[1] + values[0]) / 3
    parameters = {"tau": "imaginary", "T": [0.02, 0.01, 0.005], "width": 0.6, "center": [1.5, 0.0]}
    return [_result("nonrel-initial-condition", parameters, abs(extrapolated - 1j), tolerance)]


def _check_nonrel_s0(trunc: TruncationSpec, tolerance: float) -> List[CheckResult]:
    cfg = FieldConfiguration(eB=1.0, mu=0.3)
    kind = NonrelKind(Species.ANTIPARTICLE)
    outer = SpacetimePoint(0.0, 1.0, 0.0)
    results = []
    for ext in Extension:
        near, far = (abs(nonrel_critical(kind, reduce(SpacetimePoint(0.0, r, 0.5), outer, cfg), cfg, 0.3, ext))
                     for r in (0.05, 0.2))
        ratio = near / far
        grows = ratio > tolerance
        expected = ext is Extension.MINUS_HALF_PI
        results.append(CheckResult("nonrel-s0-behaviour", {"extension": ext.value, "r": [0.05, 0.2],
                                                           "expect": "growth" if expected else "decay"},
                                   float(ratio), tolerance, bool(grows == expected)))
    return results


CHECKS: Dict[str, Callable[[TruncationSpec, float], List[CheckResult]]] = {
    "sum-identity": _check_sum_identity,
    "y-equivalence": _check_y_equivalence,
    "y-ode": _check_y_ode,
    "kernel-mode-sum": _check_kernel_mode_sum,
    "uniform-limit": _check_uniform_limit,
    "scalar-correspondence": _check_scalar_correspondence,
    "bilinear": _check_bilinear,
    "delta-mode-sum": _check_delta_mode_sum,
    "contour-independence": _check_contour_independence,
    "causality": _check_causality,
    "dirac-residual": _check_dirac_residual,
    "nonrel-closed-sums": _check_nonrel_closed_sums,
    "nonrel-schrodinger": _check_nonrel_schrodinger,
    "nonrel-initial-condition": _check_nonrel_initial_condition,
    "nonrel-s0-behaviour": _check_nonrel_s0,
    "spin-down-mode-sum": _check_spin_down_mode_sum,
    "smp-dirac-route": _check_smp_dirac_route,
    "smp-anticommutator": _check_smp_anticommutator,
}


def run_suite(check_ids: Optional[Iterable[str]] = None, trunc: Optional[TruncationSpec] = None,
              tolerances: Optional[Dict[str, float]] = None, threads: int = 1) -> List[CheckResult]:
    """
    Run registered checks concurrently; results come back in registry order.

    Raises:
        ValidationError: For an unknown check id
    """
    selected = list(CHECKS) if check_ids is None else list(check_ids)
    unknown = [check_id for check_id in selected if check_id not in CHECKS]
    if unknown:
        raise ValidationError(f"Unknown check id(s): {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    trunc = TruncationSpec() if trunc is None else trunc
    limits = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    ordered = [check_id for check_id in CHECKS if check_id in selected]

    def run(check_id: str) -> List[CheckResult]:
        logger.info("Running check %s", check_id)
        return CHECKS[check_id](trunc, limits[check_id])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        batches = list(pool.map(run, ordered))
    results = [result for batch in batches for result in batch]
    failed = sum(not result.passed for result in results)
    logger.info("%d checks, %d failed", len(results), failed)
    return results


if __name__ == "__main__":
    for outcome in run_suite(["sum-identity", "y-equivalence", "scalar-correspondence"]):
        print(f"{outcome.check_id:>22} {'PASS' if outcome.passed else 'FAIL'} residual={outcome.residual:.3e}")
