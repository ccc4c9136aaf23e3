"""
Special functions for the solenoid Green functions.

Gamma function, generalized Laguerre polynomials L_m^alpha, the normalized
Laguerre functions I_{m+alpha,m}(x) and Bessel functions J_nu(z) of real order
nu > -1 and complex argument (principal branch of z^nu).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

try:
    from .errors import DomainError
except ImportError:
    from errors import DomainError

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]
ArrayC = NDArray[np.complex128]
RealOrArray = Union[float, ArrayR]
ComplexOrArray = Union[complex, ArrayC]

# Largest |z| accepted by bessel_j.
Z_MAX = 1000.0
# Arguments closer than this (in arg z) to the negative real axis are snapped onto arg z = +pi.
BRANCH_CUT_TOL = 1e-12


@dataclass(frozen=True)
class LaguerreIndex:
    """Radial quantum number m and order offset alpha of I_{m+alpha,m}."""

    m: int
    alpha: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"Laguerre index m must be a nonnegative integer, got {self.m}")
        if not self.alpha > -1.0:
            raise DomainError(f"Laguerre order alpha must exceed -1, got {self.alpha}")


def gamma_fn(x: float) -> float:
    """
    Gamma function for positive real argument.

    Raises:
        DomainError: If x <= 0
    """
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return float(special.gamma(x))


def log_gamma_fn(x: RealOrArray) -> RealOrArray:
    """log Gamma(x) for x > 0; used where Gamma itself overflows (m ~ 300)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise DomainError("log_gamma_fn requires x > 0")
    result = special.gammaln(x_arr)
    return float(result) if result.ndim == 0 else result


def laguerre_poly(m: int, alpha: float, x: ArrayLike) -> RealOrArray:
    """
    Generalized Laguerre polynomial L_m^alpha(x) by the upward recurrence

        (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}.

    Args:
        m: Degree, m >= 0
        alpha: Order, alpha > -1
        x: Evaluation point(s), x >= 0

    Returns:
        L_m^alpha(x) with the shape of x
    """
    LaguerreIndex(m, alpha)
    x_arr = np.asarray(x, dtype=float)
    previous = np.ones_like(x_arr)
    if m == 0:
        return float(previous) if previous.ndim == 0 else previous
    current = 1.0 + alpha - x_arr
    for k in range(1, m):
        previous, current = current, ((2 * k + 1 + alpha - x_arr) * current - (k + alpha) * previous) / (k + 1)
    return float(current) if current.ndim == 0 else current


def laguerre_table(m_max: int, alpha: float, x: ArrayLike) -> ArrayR:
    """
    All L_k^alpha(x) for k = 0..m_max in one recurrence pass.

    Returns:
        Array of shape (m_max+1,) + shape(x)
    """
    LaguerreIndex(m_max, alpha)
    x_arr = np.asarray(x, dtype=float)
    table = np.empty((m_max + 1,) + x_arr.shape)
    table[0] = 1.0
    if m_max >= 1:
        table[1] = 1.0 + alpha - x_arr
    for k in range(1, m_max):
        table[k + 1] = ((2 * k + 1 + alpha - x_arr) * table[k] - (k + alpha) * table[k - 1]) / (k + 1)
    return table


def _radial_envelope(alpha: float, x_arr: ArrayR) -> ArrayR:
    """e^{-x/2} x^{alpha/2}, with the x = 0 value for alpha >= 0."""
    if np.any(x_arr < 0):
        raise DomainError("Laguerre functions require x >= 0")
    at_origin = x_arr == 0
    if alpha < 0 and np.any(at_origin):
        raise DomainError(f"I_(m+alpha,m) with alpha={alpha} < 0 diverges at x = 0")
    safe = np.where(at_origin, 1.0, x_arr)
    envelope = np.exp(-safe / 2.0) * safe ** (alpha / 2.0)
    if alpha > 0:
        envelope = np.where(at_origin, 0.0, envelope)
    elif alpha == 0:
        envelope = np.where(at_origin, 1.0, envelope)
    return envelope


def laguerre_fn(idx: LaguerreIndex, x: ArrayLike) -> RealOrArray:
    """
    Normalized Laguerre function

        I_{m+alpha,m}(x) = sqrt(m!/Gamma(m+alpha+1)) e^{-x/2} x^{alpha/2} L_m^alpha(x).

    Raises:
        DomainError: At x = 0 when alpha < 0 (irregular functions)
    """
    x_arr = np.asarray(x, dtype=float)
    envelope = _radial_envelope(idx.alpha, x_arr)
    log_norm = 0.5 * (log_gamma_fn(idx.m + 1.0) - log_gamma_fn(idx.m + idx.alpha + 1.0))
    value = np.exp(log_norm) * envelope * laguerre_poly(idx.m, idx.alpha, x_arr)
    return float(value) if np.ndim(value) == 0 else value


def laguerre_fn_table(m_max: int, alpha: float, x: ArrayLike) -> ArrayR:
    """I_{k+alpha,k}(x) for k = 0..m_max, shape (m_max+1,) + shape(x)."""
    x_arr = np.asarray(x, dtype=float)
    envelope = _radial_envelope(alpha, x_arr)
    k = np.arange(m_max + 1, dtype=float)
    log_norm = 0.5 * (special.gammaln(k + 1.0) - special.gammaln(k + alpha + 1.0))
    norm = np.exp(log_norm).reshape((m_max + 1,) + (1,) * x_arr.ndim)
    return norm * envelope * laguerre_table(m_max, alpha, x_arr)


def bessel_j(order: ArrayLike, z: ArrayLike) -> ComplexOrArray:
    """
    Bessel function J_nu(z) of real order nu > -1, principal branch.

    order and z broadcast against each other. On the cut (arg z within
    BRANCH_CUT_TOL of +-pi) the value for arg z = +pi is returned, using
    J_nu(-x) = e^{i pi nu} J_nu(x).

    Args:
        order: Order(s) nu > -1
        z: Complex argument(s), |z| <= Z_MAX

    Returns:
        Complex scalar or array of the broadcast shape

    Raises:
        DomainError: nu <= -1, |z| > Z_MAX, or z = 0 with nu < 0
    """
    nu = np.asarray(order, dtype=float)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(nu <= -1.0):
        raise DomainError(f"Bessel order must exceed -1, got min {nu.min()}")
    if np.any(np.abs(z_arr) > Z_MAX):
        raise DomainError(f"|z| = {np.abs(z_arr).max():.6g} exceeds the supported bound {Z_MAX}")
    nu_b, z_b = np.broadcast_arrays(nu, z_arr)
    at_origin = z_b == 0
    if np.any(at_origin & (nu_b < 0)):
        raise DomainError("J_nu(0) diverges for negative order")

    on_cut = ~at_origin & (np.abs(np.angle(z_b)) > np.pi - BRANCH_CUT_TOL)
    if np.any(on_cut):
        logger.debug("bessel_j: %d argument(s) snapped onto arg z = +pi", int(on_cut.sum()))
    safe_z = np.where(at_origin, 1.0, np.where(on_cut, -z_b, z_b))
    values = special.jv(nu_b, safe_z)
    values = np.where(on_cut, np.exp(1j * np.pi * nu_b) * values, values)
    values = np.where(at_origin, np.where(nu_b == 0, 1.0 + 0j, 0j), values)
    return complex(values) if values.ndim == 0 else values


def bessel_j_derivative(order: ArrayLike, z: ArrayLike) -> ComplexOrArray:
    """
    dJ_nu/dz = (nu/z) J_nu(z) - J_{nu+1}(z), on the branch and domain of bessel_j.

    Raises:
        DomainError: As bessel_j, or z = 0 with nu < 1 other than nu = 0
    """
    nu = np.asarray(order, dtype=float)
    z_arr = np.asarray(z, dtype=complex)
    nu_b, z_b = np.broadcast_arrays(nu, z_arr)
    at_origin = z_b == 0
    if np.any(at_origin & (nu_b < 1) & (nu_b != 0)):
        raise DomainError("dJ_nu/dz diverges at z = 0 for nu < 1, nu != 0")
    safe_z = np.where(at_origin, 1.0, z_b)
    values = nu_b / safe_z * bessel_j(nu_b, safe_z) - bessel_j(nu_b + 1, safe_z)
    values = np.where(at_origin, np.where(nu_b == 1, 0.5 + 0j, 0j), values)
    return complex(values) if np.ndim(values) == 0 else values


if __name__ == "__main__":
    print(f"Gamma(4.3)          = {gamma_fn(4.3):.15g}")
    print(f"L_2^0.5(1.5)        = {laguerre_poly(2, 0.5, 1.5):.15g}")
    print(f"I_(-0.4+3,3)(1.2)   = {laguerre_fn(LaguerreIndex(3, -0.4), 1.2):.15g}")
    print(f"J_0.5(pi/2)         = {bessel_j(0.5, np.pi / 2):.15g}")
