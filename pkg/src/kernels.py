"""
Closed-form proper-time kernels.

f(x, x', s) such that Delta^c = int_0^inf f ds: prefactors A(s) (2+1) and
D(s) (3+1), per-wave angular factors Phi_{l,sigma}(s), the resummed Y
function, the extension-independent and extension-specific kernel parts,
the integer-flux (uniform field) kernel and the scalar kernels.

All kernels broadcast over arrays of s and of the reduced coordinates;
matrix-valued results carry the spinor indices last.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

try:
    from .errors import ConvergenceError, PoleError, ValidationError
    from .modes import Dimension, Extension, FieldConfiguration, SpacetimePoint, radial_order
    from .specfun import BRANCH_CUT_TOL, bessel_j
except ImportError:
    from errors import ConvergenceError, PoleError, ValidationError
    from modes import Dimension, Extension, FieldConfiguration, SpacetimePoint, radial_order
    from specfun import BRANCH_CUT_TOL, bessel_j

logger = logging.getLogger(__name__)

KernelMatrix = NDArray[np.complex128]

POLE_EPSILON = 1e-8
Y_TOLERANCE = 1e-14
Y_MAX_TERMS = 500
Y_CHUNK = 16


@dataclass(frozen=True)
class ReducedCoordinates:
    """
    rho = gamma r^2/2, rho' = gamma r'^2/2, dphi = phi - phi' (not reduced
    mod 2 pi), dx0 and dx3. dx0 may be complex (imaginary-time evaluation);
    fields may be arrays that broadcast together.
    """

    rho: Union[float, NDArray]
    rho_prime: Union[float, NDArray]
    dphi: Union[float, NDArray]
    dx0: Union[complex, NDArray] = 0.0
    dx3: Union[float, NDArray] = 0.0

    def transverse_distance_sq(self, cfg: FieldConfiguration):
        r_sq = 2.0 * np.asarray(self.rho) / cfg.gamma
        rp_sq = 2.0 * np.asarray(self.rho_prime) / cfg.gamma
        return r_sq + rp_sq - 2.0 * np.sqrt(r_sq * rp_sq) * np.cos(self.dphi)

    def radial_gap_sq(self, cfg: FieldConfiguration):
        """(r - r')^2."""
        r = np.sqrt(2.0 * np.asarray(self.rho) / cfg.gamma)
        rp = np.sqrt(2.0 * np.asarray(self.rho_prime) / cfg.gamma)
        return (r - rp) ** 2

    def radial_sum_sq(self, cfg: FieldConfiguration):
        """(r + r')^2, the squared path length of the wave diffracted by the solenoid."""
        r = np.sqrt(2.0 * np.asarray(self.rho) / cfg.gamma)
        rp = np.sqrt(2.0 * np.asarray(self.rho_prime) / cfg.gamma)
        return (r + rp) ** 2


def reduce(p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration,
           time_shift: complex = 0.0) -> ReducedCoordinates:
    """Reduced coordinates of a point pair; time_shift is added to dx0."""
    dx0 = p.x0 - p_prime.x0 + time_shift
    return ReducedCoordinates(
        rho=cfg.gamma * p.r ** 2 / 2.0,
        rho_prime=cfg.gamma * p_prime.r ** 2 / 2.0,
        dphi=p.phi - p_prime.phi,
        dx0=dx0 if isinstance(dx0, complex) and dx0.imag != 0 else float(np.real(dx0)),
        dx3=p.x3 - p_prime.x3,
    )


def proper_time_sqrt(s: ArrayLike):
    """
    sqrt(s) continued from the positive real axis.

    Principal branch for Re s >= 0 and below the real axis, arg s = -pi + 0
    on the negative real axis, and arg s in (-3pi/2, -pi) above it, where the
    anticausal contour enters the upper half-plane.
    """
    s_arr = np.asarray(s, dtype=complex)
    root = np.sqrt(s_arr)
    on_cut = (s_arr.imag == 0) & (s_arr.real < 0)
    root = np.where(on_cut, -1j * np.sqrt(np.abs(s_arr.real)), root)
    root = np.where((s_arr.imag > 0) & (s_arr.real < 0), -root, root)
    return complex(root) if root.ndim == 0 else root


def _proper_time(s: ArrayLike) -> NDArray[np.complex128]:
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr == 0):
        raise ValidationError("Proper time s = 0 is not admissible")
    return s_arr


def guarded_sin(theta: NDArray[np.complex128]) -> NDArray[np.complex128]:
    sin_theta = np.sin(theta)
    if np.any(np.abs(sin_theta) < POLE_EPSILON):
        raise PoleError(f"|sin(gamma s)| < {POLE_EPSILON} near gamma s = "
                        f"{theta.ravel()[np.argmin(np.abs(sin_theta))]:.6g}")
    return sin_theta


def squeeze_scalar(value):
    return complex(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class BesselSheet:
    """
    Bessel argument z = sqrt(rho rho')/sin(theta) with the winding number k
    that continues the closed forms from the real segment 0 < theta < pi/2:
    every J_nu(z) is multiplied by e^{2 pi i k nu}.

    Below the real axis arg z is followed continuously from theta = 0. Above
    it the plane is slit along the positive imaginary axis; the left half is
    reached across the negative real axis, where arg z = pi.
    """

    z: NDArray[np.complex128]
    winding: NDArray[np.int64]

    @classmethod
    def build(cls, theta: ArrayLike, rho: ArrayLike, rho_prime: ArrayLike,
              sin_theta: Optional[ArrayLike] = None) -> "BesselSheet":
        theta = np.asarray(theta, dtype=complex)
        sin_theta = np.sin(theta) if sin_theta is None else np.asarray(sin_theta)
        root = np.sqrt(np.asarray(rho, dtype=float) * np.asarray(rho_prime, dtype=float))
        z = root / sin_theta
        arg_z = np.angle(z)
        arg_z = np.where(np.abs(arg_z) > np.pi - BRANCH_CUT_TOL, np.pi, arg_z)
        # sin(theta) = (i/2) e^{-i theta} (1 - e^{2 i theta}) = -(i/2) e^{i theta} (1 - e^{-2 i theta});
        # the bracket with |e^{...}| < 1 has a continuous principal argument
        lower = np.pi / 2 - theta.real - np.angle(1.0 - np.exp(-2j * theta))
        upper = (theta.real - np.pi / 2 - np.angle(1.0 - np.exp(2j * theta))
                 + np.where(theta.real < 0, 2 * np.pi, 0.0))
        continued_arg_z = np.where(theta.imag > 0, upper, lower)
        winding = np.rint((continued_arg_z - arg_z) / (2 * np.pi)).astype(np.int64)
        if np.any(winding != 0):
            logger.debug("Bessel sheet windings in [%d, %d]", winding.min(), winding.max())
        return cls(z=z, winding=winding)

    def j(self, order: float):
        return bessel_j(order, self.z) * np.exp(2j * np.pi * self.winding * order)

    def y(self, eta: ArrayLike, mu: float):
        value, _ = y_series(self.z, eta, mu)
        return value * np.exp(2j * np.pi * self.winding * mu)

    def y_pair(self, eta: ArrayLike, mu: float):
        """Y(z, eta, mu) + Y(z, -eta, -mu); e^{-i z cos eta} - J_0(z) at integer flux."""
        if mu == 0:
            return np.exp(-1j * self.z * np.cos(eta)) - self.j(0.0)
        return self.y(eta, mu) + self.y(-np.asarray(eta), -mu)


# Y function -----------------------------------------------------------------

def y_series(z: ArrayLike, eta: ArrayLike, mu: float,
             l_max: Optional[int] = None) -> Tuple[Union[complex, NDArray], Union[float, NDArray]]:
    """
    Y(z, eta, mu) = sum_{l>=1} e^{i eta l} (-i)^{l+mu} J_{l+mu}(z), principal branch.

    With l_max given the partial sum through l_max is returned; otherwise
    terms are added until a chunk falls below Y_TOLERANCE relative to the
    running sum (capped at Y_MAX_TERMS). eta may be complex.

    Returns:
        (value, tail) where tail is the magnitude of the last term added

    Raises:
        ConvergenceError: If the adaptive sum hits the cap
    """
    if l_max is not None and l_max < 1:
        raise ValidationError(f"l_max must be at least 1, got {l_max}")
    z_arr, eta_arr = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(eta, dtype=complex))
    shape = z_arr.shape
    z_flat = z_arr.ravel()
    eta_flat = eta_arr.ravel()
    total = np.zeros(z_flat.shape, dtype=complex)
    tail = np.zeros(z_flat.shape)
    # |J_{l+mu}(z) e^{i eta l}| starts to fall once l exceeds this reach
    reach = np.abs(z_flat) * np.exp(np.minimum(np.abs(eta_flat.imag), 700.0))
    cap = Y_MAX_TERMS if l_max is None else int(l_max)

    active = np.arange(z_flat.size)
    start = 1
    while active.size and start <= cap:
        stop = min(start + Y_CHUNK - 1, cap)
        ls = np.arange(start, stop + 1, dtype=float)[:, None]
        orders = ls + mu
        z_act = z_flat[active][None, :]
        bessel = bessel_j(orders, z_act)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_terms = 1j * eta_flat[active][None, :] * ls - 0.5j * np.pi * orders + np.log(bessel)
            terms = np.where(bessel == 0, 0j, np.exp(log_terms))
        total[active] += terms.sum(axis=0)
        tail[active] = np.abs(terms[-1])
        if l_max is None:
            chunk_max = np.abs(terms).max(axis=0)
            done = (chunk_max <= Y_TOLERANCE * np.abs(total[active])) & (stop >= reach[active])
            done |= chunk_max == 0
            active = active[~done]
        start = stop + 1

    if l_max is None and active.size:
        raise ConvergenceError(f"Y series not converged after {Y_MAX_TERMS} terms "
                               f"(max |z| = {np.abs(z_flat[active]).max():.4g})")
    value = total.reshape(shape)
    tail = tail.reshape(shape)
    if not shape:
        return complex(value), float(tail)
    return value, tail


def y_integral(z: complex, eta: float, mu: float, tol: float = 1e-11) -> complex:
    """
    Y(z, eta, mu) from its first-order ODE:

        Y = (1/2)(-i)^mu int_0^z e^{i(y-z) cos eta} [-i e^{i eta} J_mu(y) + J_{1+mu}(y)] dy

    along the straight segment from 0 to z.

    Raises:
        ConvergenceError: If the achieved absolute error exceeds tol
    """
    z = complex(z)
    if z == 0:
        return 0j
    cos_eta = np.cos(eta)
    rotation = -1j * np.exp(1j * eta)

    def integrand(t: float) -> complex:
        y = z * t
        source = rotation * bessel_j(mu, y) + bessel_j(1.0 + mu, y)
        return np.exp(1j * (y - z) * cos_eta) * source * z

    options = dict(epsabs=tol / 4, epsrel=1e-13, limit=200)
    real, real_err = integrate.quad(lambda t: integrand(t).real, 0.0, 1.0, **options)
    imag, imag_err = integrate.quad(lambda t: integrand(t).imag, 0.0, 1.0, **options)
    achieved = math.hypot(real_err, imag_err)
    if achieved > tol:
        raise ConvergenceError(f"Y integral reached only {achieved:.3g} (requested {tol:.3g})")
    return 0.5 * np.exp(-0.5j * np.pi * mu) * complex(real, imag)


# Prefactors -------------------------------------------------------------------

def prefactor_A(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration):
    """
    A(s) = eB / (8 pi^{3/2} s^{1/2} sin(eBs)) exp{i pi/4 - i M^2 s - i l0 dphi
           - i dx0^2/4s + (i/2)(rho + rho') cot(gamma s)}.

    Raises:
        PoleError: Near s = k pi/gamma
    """
    s_arr = _proper_time(s)
    theta = cfg.gamma * s_arr
    sin_theta = guarded_sin(theta)
    exponent = (0.25j * np.pi - 1j * cfg.M ** 2 * s_arr - 1j * cfg.l0 * np.asarray(rc.dphi)
                - 1j * np.asarray(rc.dx0) ** 2 / (4 * s_arr)
                + 0.5j * (np.asarray(rc.rho) + np.asarray(rc.rho_prime)) * np.cos(theta) / sin_theta)
    value = cfg.gamma * np.exp(exponent) / (8 * np.pi ** 1.5 * proper_time_sqrt(s_arr) * sin_theta)
    return squeeze_scalar(value)


def prefactor_D(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration):
    """
    3+1 prefactor D(s) = eB / (16 pi^2 s sin(eBs)) exp{(i/4s)[dx3^2 - dx0^2]
    - i M^2 s - i l0 dphi + (i/2)(rho + rho') cot(gamma s)}.
    """
    s_arr = _proper_time(s)
    theta = cfg.gamma * s_arr
    sin_theta = guarded_sin(theta)
    exponent = (0.25j * (np.asarray(rc.dx3) ** 2 - np.asarray(rc.dx0) ** 2) / s_arr
                - 1j * cfg.M ** 2 * s_arr - 1j * cfg.l0 * np.asarray(rc.dphi)
                + 0.5j * (np.asarray(rc.rho) + np.asarray(rc.rho_prime)) * np.cos(theta) / sin_theta)
    value = cfg.gamma * np.exp(exponent) / (16 * np.pi ** 2 * s_arr * sin_theta)
    return squeeze_scalar(value)


def prefactor_scalar(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
                     D: int = 2, dx_extra: Sequence[float] = ()):
    """
    A^(D)(s) = A(s) exp{(i/4s) sum_k dx_k^2} (e^{-i pi/2}/(4 pi s))^{(D-2)/2}
    for D spatial dimensions; dx_extra holds the D-2 longitudinal separations.
    """
    if D < 2:
        raise ValidationError(f"Scalar kernels need D >= 2 spatial dimensions, got {D}")
    if len(dx_extra) not in (0, D - 2):
        raise ValidationError(f"Expected {D - 2} longitudinal separations, got {len(dx_extra)}")
    value = np.asarray(prefactor_A(s, rc, cfg))
    if D > 2:
        s_arr = _proper_time(s)
        spread = sum(float(dx) ** 2 for dx in dx_extra)
        factor = np.exp(-0.25j * np.pi) / (2 * math.sqrt(math.pi) * proper_time_sqrt(s_arr))
        value = value * np.exp(0.25j * spread / s_arr) * factor ** (D - 2)
    return squeeze_scalar(value)


def _spinor_prefactor(s, rc, cfg, dim: Dimension):
    return prefactor_A(s, rc, cfg) if dim is Dimension.D2PLUS1 else prefactor_D(s, rc, cfg)


def _kernel_matrix(prefactor, c_plus, c_minus, dim: Dimension) -> KernelMatrix:
    """prefactor * (c_plus Xi_+ + c_minus Xi_-), with Sigma^3 promotion in 3+1."""
    c_plus, c_minus, prefactor = np.broadcast_arrays(np.asarray(c_plus, dtype=complex),
                                                     np.asarray(c_minus, dtype=complex),
                                                     np.asarray(prefactor, dtype=complex))
    diagonal = [c_plus, c_minus] if dim is Dimension.D2PLUS1 else [c_plus, c_minus, c_plus, c_minus]
    size = len(diagonal)
    matrix = np.zeros(c_plus.shape + (size, size), dtype=complex)
    for k, entry in enumerate(diagonal):
        matrix[..., k, k] = prefactor * entry
    return matrix


def _sheet_setup(s, rc: ReducedCoordinates, cfg: FieldConfiguration):
    s_arr = _proper_time(s)
    theta = cfg.gamma * s_arr
    sheet = BesselSheet.build(theta, rc.rho, rc.rho_prime, guarded_sin(theta))
    return s_arr, sheet


# Kernels ----------------------------------------------------------------------

def phi_factor(l: int, sigma: int, s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
               ext: Extension = Extension.MINUS_HALF_PI):
    """
    Phi_{l,sigma}(s) = e^{i l_s dphi} e^{-i (l_s + mu) eBs} e^{-i pi alpha/2} J_alpha(z),
    l_s = l - (1+sigma)/2, alpha = |l_s + mu| except on the critical l = 0 line,
    where the extension fixes alpha to -mu (Theta = -pi/2) or mu - 1 (Theta = +pi/2).
    At mu = 0 both extensions coincide.
    """
    s_arr, sheet = _sheet_setup(s, rc, cfg)
    effective = Extension.MINUS_HALF_PI if cfg.mu == 0 else ext
    alpha = radial_order(l, sigma, cfg, effective)
    l_sigma = l - (1 + sigma) // 2
    phase = np.exp(1j * l_sigma * np.asarray(rc.dphi) - 1j * (l_sigma + cfg.mu) * cfg.eB * s_arr
                   - 0.5j * np.pi * alpha)
    return squeeze_scalar(phase * sheet.j(alpha))


def f_partial_wave(l: int, s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
                   ext: Extension = Extension.MINUS_HALF_PI,
                   dim: Optional[Dimension] = None) -> KernelMatrix:
    """f_l = A(s) sum_sigma Phi_{l,sigma}(s) e^{-i sigma eBs} Xi_sigma (D(s) and Sigma^3 in 3+1)."""
    dim = cfg.dim if dim is None else dim
    theta_b = cfg.eB * _proper_time(s)
    c_plus = phi_factor(l, 1, s, rc, cfg, ext) * np.exp(-1j * theta_b)
    c_minus = phi_factor(l, -1, s, rc, cfg, ext) * np.exp(1j * theta_b)
    return _kernel_matrix(_spinor_prefactor(s, rc, cfg, dim), c_plus, c_minus, dim)


def f_noncritical(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
                  dim: Optional[Dimension] = None) -> KernelMatrix:
    """
    Sum over l != 0 of the partial-wave kernels, in closed form:

        A e^{-i mu eBs} e^{-i eBs sigma3} {Y(z, eta, mu) + Y(z, -eta, -mu)
          + [e^{-i pi mu/2} J_mu - e^{-i eta} e^{-i pi (1-mu)/2} J_{1-mu}] Xi_+},

    eta = dphi - eBs; the sigma3 factor is applied per projector. Integer
    flux uses the closed plane-wave form e^{-i z cos eta}.
    """
    dim = cfg.dim if dim is None else dim
    s_arr, sheet = _sheet_setup(s, rc, cfg)
    theta_b = cfg.eB * s_arr
    eta = np.asarray(rc.dphi) - theta_b
    mu = cfg.mu
    y_sum = sheet.y_pair(eta, mu)
    critical_gap = (np.exp(-0.5j * np.pi * mu) * sheet.j(mu)
                    - np.exp(-1j * eta - 0.5j * np.pi * (1 - mu)) * sheet.j(1 - mu))
    common = np.exp(-1j * mu * theta_b)
    c_plus = common * np.exp(-1j * theta_b) * (y_sum + critical_gap)
    c_minus = common * np.exp(1j * theta_b) * y_sum
    return _kernel_matrix(_spinor_prefactor(s, rc, cfg, dim), c_plus, c_minus, dim)


def f_critical(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration, ext: Extension,
               dim: Optional[Dimension] = None) -> KernelMatrix:
    """
    The l = 0 kernel, specific to the extension:
        Theta = -pi/2: J_{1-mu} on Xi_+, J_{-mu} on Xi_-;
        Theta = +pi/2: J_{mu-1} on Xi_+, J_{mu} on Xi_-.
    """
    return f_partial_wave(0, s, rc, cfg, ext, dim)


def f_total(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration, ext: Extension,
            dim: Optional[Dimension] = None) -> KernelMatrix:
    """Full kernel f = f_nc + f_0 for the chosen extension."""
    return f_noncritical(s, rc, cfg, dim) + f_critical(s, rc, cfg, ext, dim)


def f_uniform(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
              dim: Optional[Dimension] = None) -> KernelMatrix:
    """
    Integer-flux kernel A(s) e^{-i eBs sigma3} exp{-i z cos(dphi - eBs)}.

    The fractional flux mu of cfg plays no role here; l0 enters through A(s).
    """
    dim = cfg.dim if dim is None else dim
    s_arr, sheet = _sheet_setup(s, rc, cfg)
    theta_b = cfg.eB * s_arr
    plane = np.exp(-1j * sheet.z * np.cos(np.asarray(rc.dphi) - theta_b))
    return _kernel_matrix(_spinor_prefactor(s, rc, cfg, dim),
                          np.exp(-1j * theta_b) * plane, np.exp(1j * theta_b) * plane, dim)


def f_scalar_partial_wave(l: int, s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration):
    """f_l^sc = A(s) e^{i l dphi} e^{-i (l+mu) eBs} e^{-i pi |l+mu|/2} J_{|l+mu|}(z)."""
    s_arr, sheet = _sheet_setup(s, rc, cfg)
    nu = l + cfg.mu
    phase = np.exp(1j * l * np.asarray(rc.dphi) - 1j * nu * cfg.eB * s_arr - 0.5j * np.pi * abs(nu))
    return squeeze_scalar(prefactor_A(s, rc, cfg) * phase * sheet.j(abs(nu)))


def f_scalar(s: ArrayLike, rc: ReducedCoordinates, cfg: FieldConfiguration,
             D: int = 2, dx_extra: Sequence[float] = ()):
    """
    Klein-Gordon kernel

        A^(D)(s) e^{-i mu eBs} [e^{-i pi mu/2} J_mu(z) + Y(z, eta, mu) + Y(z, -eta, -mu)].
    """
    s_arr, sheet = _sheet_setup(s, rc, cfg)
    theta_b = cfg.eB * s_arr
    eta = np.asarray(rc.dphi) - theta_b
    mu = cfg.mu
    bracket = np.exp(-0.5j * np.pi * mu) * sheet.j(mu) + sheet.y_pair(eta, mu)
    value = prefactor_scalar(s, rc, cfg, D, dx_extra) * np.exp(-1j * mu * theta_b) * bracket
    return squeeze_scalar(value)


if __name__ == "__main__":
    demo = FieldConfiguration(eB=1.0, mu=0.3)
    point = ReducedCoordinates(rho=1.0, rho_prime=1.0, dphi=0.7)
    s_demo = 0.4 - 0.05j
    for ext in Extension:
        print(f"f_total({ext.value}) at s={s_demo}:\n{f_total(s_demo, point, demo, ext)}")
    print(f"f_scalar: {f_scalar(s_demo, point, demo):.12g}")
