"""
Physical configuration and exact solutions in the magnetic-solenoid field.

Field configuration, gamma algebra, potentials, the spectra of the squared
Dirac equation for both natural extensions and both field orientations,
the normalized Dirac spinors and the ladder relations between spin
components. Finite-difference helpers for the momentum operator
P_nu = i d_nu + eA_nu live here as well; proptime, nonrel and oracle reuse them.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

try:
    from .errors import AxisError, DimensionError, ValidationError
    from .specfun import LaguerreIndex, laguerre_fn, laguerre_fn_table
except ImportError:
    from errors import AxisError, DimensionError, ValidationError
    from specfun import LaguerreIndex, laguerre_fn, laguerre_fn_table

logger = logging.getLogger(__name__)

SpinorValue = NDArray[np.complex128]
Field = Callable[["SpacetimePoint"], NDArray[np.complex128]]

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Relative finite-difference step, in units of min(r, 1/sqrt(gamma), 1).
FD_RELATIVE_STEP = 2e-3
# The stencil must stay this many steps away from the axis.
AXIS_CLEARANCE = 10.0


class Dimension(Enum):
    D2PLUS1 = "2+1"
    D3PLUS1 = "3+1"

    @property
    def spinor_size(self) -> int:
        return 2 if self is Dimension.D2PLUS1 else 4


class Extension(Enum):
    """Natural self-adjoint extensions Theta = -pi/2 and Theta = +pi/2."""

    MINUS_HALF_PI = "-pi/2"
    PLUS_HALF_PI = "+pi/2"

    @property
    def theta(self) -> float:
        return -math.pi / 2 if self is Extension.MINUS_HALF_PI else math.pi / 2

    @classmethod
    def parse(cls, value) -> "Extension":
        if isinstance(value, Extension):
            return value
        aliases = {"-pi/2": cls.MINUS_HALF_PI, "minus": cls.MINUS_HALF_PI,
                   "+pi/2": cls.PLUS_HALF_PI, "pi/2": cls.PLUS_HALF_PI, "plus": cls.PLUS_HALF_PI}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError as e:
            raise ValidationError(f"Extension must be -pi/2 or +pi/2, got {value!r}") from e


class Branch(Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.PLUS else -1


@dataclass(frozen=True)
class FieldConfiguration:
    """
    Physical parameters: signed eB, flux split l0 + mu, mass M, dimension.
    """

    eB: float
    l0: int = 0
    mu: float = 0.0
    M: float = 1.0
    dim: Dimension = Dimension.D2PLUS1

    def __post_init__(self):
        if not np.isfinite(self.eB) or self.eB == 0:
            raise ValidationError(f"eB must be finite and nonzero, got {self.eB}")
        if int(self.l0) != self.l0:
            raise ValidationError(f"l0 must be an integer, got {self.l0}")
        if not 0.0 <= self.mu < 1.0:
            raise ValidationError(f"mu must lie in [0, 1), got {self.mu}")
        if not self.M > 0:
            raise ValidationError(f"M must be positive, got {self.M}")
        if not isinstance(self.dim, Dimension):
            object.__setattr__(self, "dim", Dimension(self.dim))

    @property
    def gamma(self) -> float:
        return abs(self.eB)

    @property
    def xi(self) -> int:
        """Orientation sgn B."""
        return 1 if self.eB > 0 else -1

    @property
    def flux(self) -> float:
        return self.l0 + self.mu

    def replace(self, **changes) -> "FieldConfiguration":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ModeIndex:
    m: int
    l: int
    sigma: int
    p3: Optional[float] = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValidationError(f"m must be a nonnegative integer, got {self.m}")
        if int(self.l) != self.l:
            raise ValidationError(f"l must be an integer, got {self.l}")
        if self.sigma not in (1, -1):
            raise ValidationError(f"sigma must be +1 or -1, got {self.sigma}")

    def with_sigma(self, sigma: int, m: Optional[int] = None) -> "ModeIndex":
        return ModeIndex(self.m if m is None else m, self.l, sigma, self.p3)


@dataclass(frozen=True)
class SpacetimePoint:
    """Event in cylindrical coordinates (x0, r, phi, x3)."""

    x0: float = 0.0
    r: float = 1.0
    phi: float = 0.0
    x3: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValidationError(f"r must be nonnegative, got {self.r}")

    def cartesian(self) -> Tuple[float, float, float, float]:
        return (self.x0, self.r * math.cos(self.phi), self.r * math.sin(self.phi), self.x3)

    @classmethod
    def from_cartesian(cls, x0: float, x1: float, x2: float, x3: float = 0.0,
                       phi_hint: float = 0.0) -> "SpacetimePoint":
        """Build a point, choosing the angle representative nearest phi_hint."""
        phi = math.atan2(x2, x1)
        phi += 2 * math.pi * round((phi_hint - phi) / (2 * math.pi))
        return cls(x0, math.hypot(x1, x2), phi, x3)

    def shifted(self, axis: int, offset: float) -> "SpacetimePoint":
        """Shift along a Cartesian axis (0: time, 1: x, 2: y, 3: z)."""
        coords = list(self.cartesian())
        coords[axis] += offset
        return SpacetimePoint.from_cartesian(*coords, phi_hint=self.phi)


@dataclass(frozen=True)
class GammaAlgebra:
    """Gamma matrices Gamma^nu, Sigma^3 and spin projectors for one dimension."""

    gammas: Tuple[NDArray[np.complex128], ...]
    sigma3: NDArray[np.complex128]
    metric: Tuple[float, ...]

    @classmethod
    def for_dimension(cls, dim: Dimension) -> "GammaAlgebra":
        if dim is Dimension.D2PLUS1:
            return cls((SIGMA_3, 1j * SIGMA_2, -1j * SIGMA_1), SIGMA_3, (1.0, -1.0, -1.0))
        zero = np.zeros((2, 2), dtype=complex)
        gamma0 = np.block([[IDENTITY_2, zero], [zero, -IDENTITY_2]])
        spatial = tuple(np.block([[zero, s], [-s, zero]]) for s in (SIGMA_1, SIGMA_2, SIGMA_3))
        sigma3 = np.block([[SIGMA_3, zero], [zero, SIGMA_3]])
        return cls((gamma0,) + spatial, sigma3, (1.0, -1.0, -1.0, -1.0))

    @property
    def size(self) -> int:
        return self.sigma3.shape[0]

    def projector(self, sigma: int) -> NDArray[np.complex128]:
        """Xi_sigma = (1 + sigma Sigma^3)/2."""
        return 0.5 * (np.eye(self.size, dtype=complex) + sigma * self.sigma3)

    def anticommutator_residual(self) -> float:
        """max |{G^mu, G^nu} - 2 eta^{mu nu}| over all entries."""
        worst = 0.0
        unit = np.eye(self.size)
        for mu, g_mu in enumerate(self.gammas):
            for nu, g_nu in enumerate(self.gammas):
                target = 2.0 * self.metric[mu] * unit if mu == nu else 0.0 * unit
                worst = max(worst, float(np.abs(g_mu @ g_nu + g_nu @ g_mu - target).max()))
        return worst


def spin_vector(sigma: int) -> SpinorValue:
    """Two-spinor upsilon_sigma."""
    return np.array([1, 0], dtype=complex) if sigma == 1 else np.array([0, 1], dtype=complex)


def potentials(cfg: FieldConfiguration, p: SpacetimePoint) -> NDArray[np.float64]:
    """
    Covariant components eA_nu of the solenoid-plus-uniform field.

    Returns:
        (eA_0, eA_1, eA_2) in 2+1, with eA_3 appended in 3+1

    Raises:
        AxisError: At r = 0
    """
    if p.r <= 0:
        raise AxisError("Potentials are singular on the solenoid axis")
    amplitude = cfg.flux + cfg.eB * p.r ** 2 / 2.0
    components = [0.0, amplitude * math.sin(p.phi) / p.r, -amplitude * math.cos(p.phi) / p.r]
    if cfg.dim is Dimension.D3PLUS1:
        components.append(0.0)
    return np.array(components)


def is_critical(l: int, sigma: int, ext: Extension) -> bool:
    """True for the (l=0, sigma) component whose radial function is irregular."""
    if l != 0:
        return False
    return sigma == (-1 if ext is Extension.MINUS_HALF_PI else 1)


def radial_order(l: int, sigma: int, cfg: FieldConfiguration, ext: Extension) -> float:
    """Laguerre order alpha of the radial factor I_{m+alpha,m}."""
    if is_critical(l, sigma, ext):
        return -cfg.mu if ext is Extension.MINUS_HALF_PI else cfg.mu - 1.0
    return abs(cfg.mu + l - (1 + sigma) / 2)


def spectrum_offset(l: int, sigma: int, cfg: FieldConfiguration, ext: Extension) -> float:
    """c in omega = 2 gamma (m + c)."""
    mu = cfg.mu
    shifted_l = l - (1 + sigma) // 2
    if cfg.xi > 0:
        if is_critical(l, sigma, ext):
            return 0.0 if ext is Extension.MINUS_HALF_PI else mu
        return l + mu if shifted_l >= 0 else (1 + sigma) / 2
    if is_critical(l, sigma, ext):
        return 1.0 - mu if ext is Extension.MINUS_HALF_PI else 0.0
    return -l + 1 - mu if shifted_l < 0 else (1 - sigma) / 2


def omega_spectrum(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension) -> float:
    """Eigenvalue omega of the squared transverse operator (Landau-type spectrum)."""
    return 2.0 * cfg.gamma * (mode.m + spectrum_offset(mode.l, mode.sigma, cfg, ext))


def energy(omega: float, p3: Optional[float], M: float, branch: Branch) -> float:
    """+-sqrt(M^2 + p3^2 + omega)."""
    if omega < 0:
        raise ValidationError(f"omega must be nonnegative, got {omega}")
    p3_sq = 0.0 if p3 is None else p3 * p3
    return branch.sign * math.sqrt(M * M + p3_sq + omega)


def radial_function(m: int, alpha: float, rho):
    """
    I_{m+alpha,m}(rho), including the alpha = -1 limit reached at mu = 0,
    where I_{m-1,m} = -I_{m,m-1} and I_{-1,0} = 0.
    """
    if abs(alpha + 1.0) < 1e-15:
        if m == 0:
            return np.zeros_like(np.asarray(rho, dtype=float)) if np.ndim(rho) else 0.0
        return -laguerre_fn(LaguerreIndex(m - 1, 1.0), rho)
    return laguerre_fn(LaguerreIndex(m, alpha), rho)


def radial_table(m_max: int, alpha: float, rho) -> NDArray[np.float64]:
    """radial_function for m = 0..m_max, shape (m_max+1,) + shape(rho)."""
    if abs(alpha + 1.0) < 1e-15:
        rho_arr = np.asarray(rho, dtype=float)
        table = np.zeros((m_max + 1,) + rho_arr.shape)
        if m_max >= 1:
            table[1:] = -laguerre_fn_table(m_max - 1, 1.0, rho_arr)
        return table
    return laguerre_fn_table(m_max, alpha, rho)


def squared_solution(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                     p: SpacetimePoint, branch: Branch) -> SpinorValue:
    """
    Normalized solution u_{m,l,sigma}(x) of the squared Dirac equation.

    u = e^{-i eps x0} sqrt(gamma) g_l(phi) I_{m+alpha,m}(rho) upsilon_sigma, with
    g_l = (2 pi)^{-1/2} exp{i phi [l - l0 - (1+sigma)/2]} and rho = gamma r^2/2.
    The x3 plane wave of 3+1 is attached by dirac_spinor.
    """
    omega = omega_spectrum(mode, cfg, ext)
    eps = energy(omega, mode.p3, cfg.M, branch)
    alpha = radial_order(mode.l, mode.sigma, cfg, ext)
    rho = cfg.gamma * p.r ** 2 / 2.0
    try:
        radial = radial_function(mode.m, alpha, rho)
    except ValidationError as e:
        raise AxisError(f"Irregular mode {mode} evaluated on the axis") from e
    winding = mode.l - cfg.l0 - (1 + mode.sigma) // 2
    phase = np.exp(-1j * eps * p.x0 + 1j * winding * p.phi) / math.sqrt(2 * math.pi)
    return math.sqrt(cfg.gamma) * phase * radial * spin_vector(mode.sigma)


def scalar_omega(m: int, l: int, cfg: FieldConfiguration) -> float:
    """Klein-Gordon spectrum gamma [1 + 2m + |l+mu| + xi (l+mu)]."""
    nu = l + cfg.mu
    return cfg.gamma * (1 + 2 * m + abs(nu) + cfg.xi * nu)


def scalar_mode(m: int, l: int, cfg: FieldConfiguration, p: SpacetimePoint,
                branch: Branch = Branch.PLUS) -> complex:
    """Unit-normalized scalar mode e^{-i eps x0} sqrt(gamma/2pi) e^{i(l-l0)phi} I_{m+|l+mu|,m}(rho)."""
    eps = energy(scalar_omega(m, l, cfg), None, cfg.M, branch)
    rho = cfg.gamma * p.r ** 2 / 2.0
    radial = laguerre_fn(LaguerreIndex(m, abs(l + cfg.mu)), rho)
    phase = np.exp(-1j * eps * p.x0 + 1j * (l - cfg.l0) * p.phi)
    return complex(math.sqrt(cfg.gamma / (2 * math.pi)) * phase * radial)


# Finite differences -----------------------------------------------------------

def default_step(cfg: FieldConfiguration, p: SpacetimePoint) -> float:
    return FD_RELATIVE_STEP * min(p.r, 1.0 / math.sqrt(cfg.gamma), 1.0)


def _check_clearance(p: SpacetimePoint, step: float) -> None:
    if step <= 0:
        raise ValidationError(f"Finite-difference step must be positive, got {step}")
    if p.r < AXIS_CLEARANCE * step:
        raise AxisError(f"Stencil at r={p.r} with step {step} reaches the solenoid axis")


def derivative(field: Field, p: SpacetimePoint, axis: int, step: float) -> NDArray:
    """Central difference along a Cartesian axis with one Richardson step."""
    def central(h):
        return (np.asarray(field(p.shifted(axis, h))) - np.asarray(field(p.shifted(axis, -h)))) / (2 * h)

    return (4.0 * central(step / 2) - central(step)) / 3.0


def second_derivative(field: Field, p: SpacetimePoint, axis: int, step: float,
                      center: Optional[NDArray] = None) -> NDArray:
    """Central second difference along a Cartesian axis with one Richardson step."""
    f0 = np.asarray(field(p)) if center is None else center

    def central(h):
        return (np.asarray(field(p.shifted(axis, h))) - 2 * f0 + np.asarray(field(p.shifted(axis, -h)))) / (h * h)

    return (4.0 * central(step / 2) - central(step)) / 3.0


def dirac_operator(field: Field, p: SpacetimePoint, cfg: FieldConfiguration,
                   mass_sign: int = 1, step: Optional[float] = None) -> NDArray:
    """
    (gamma^nu P_nu + mass_sign*M) applied to a spinor- or matrix-valued field.

    The operator acts on the leading (row) index of the field value.

    Raises:
        AxisError: If the stencil comes within AXIS_CLEARANCE steps of the axis
    """
    step = default_step(cfg, p) if step is None else step
    _check_clearance(p, step)
    algebra = GammaAlgebra.for_dimension(cfg.dim)
    gauge = potentials(cfg, p)
    value = np.asarray(field(p))
    result = mass_sign * cfg.M * value
    for nu, gamma_nu in enumerate(algebra.gammas):
        momentum = 1j * derivative(field, p, nu, step) + gauge[nu] * value
        result = result + gamma_nu @ momentum
    return result


def transverse_operator(field: Field, p: SpacetimePoint, cfg: FieldConfiguration,
                        step: Optional[float] = None) -> NDArray:
    """Gamma P_perp = Gamma^1 P_1 + Gamma^2 P_2 on two-spinors."""
    step = default_step(cfg, p) if step is None else step
    _check_clearance(p, step)
    algebra = GammaAlgebra.for_dimension(Dimension.D2PLUS1)
    gauge = potentials(cfg, p)
    value = np.asarray(field(p))
    result = np.zeros_like(value, dtype=complex)
    for nu in (1, 2):
        result = result + algebra.gammas[nu] @ (1j * derivative(field, p, nu, step) + gauge[nu] * value)
    return result


# Dirac spinors and ladder relations ------------------------------------------

def ladder_partner(mode: ModeIndex, cfg: FieldConfiguration,
                   ext: Extension) -> Tuple[Optional[ModeIndex], int]:
    """
    Opposite-spin mode with the same omega and the sign c of

        Gamma P_perp u_mode = c i sqrt(omega) u_partner.

    c = +1 for l >= 1, -1 for l <= -1; at l = 0 it is -1 for Theta = -pi/2
    and +1 for Theta = +pi/2, for either field orientation.
    """
    other = -mode.sigma
    shift = spectrum_offset(mode.l, mode.sigma, cfg, ext) - spectrum_offset(mode.l, other, cfg, ext)
    m_partner = mode.m + int(round(shift))
    if mode.l > 0:
        sign = 1
    elif mode.l < 0:
        sign = -1
    else:
        sign = -1 if ext is Extension.MINUS_HALF_PI else 1
    if m_partner < 0:
        return None, sign
    return mode.with_sigma(other, m_partner), sign


def ladder_check(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                 p: SpacetimePoint, step: Optional[float] = None) -> float:
    """
    Relative residual of the ladder relation at p.

    Raises:
        ValidationError: For omega = 0
    """
    omega = omega_spectrum(mode, cfg, ext)
    if omega == 0:
        raise ValidationError(f"Ladder relation undefined for the zero mode {mode}")
    partner, sign = ladder_partner(mode, cfg, ext)
    lhs = transverse_operator(lambda q: squared_solution(mode, cfg, ext, q, Branch.PLUS), p, cfg, step)
    rhs = sign * 1j * math.sqrt(omega) * squared_solution(partner, cfg, ext, p, Branch.PLUS)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


def _stacked_solution(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                      branch: Branch) -> Field:
    """U = (u, sigma3 u) e^{-i p3 x3}/sqrt(2 pi) for 3+1."""
    def stacked(q: SpacetimePoint) -> SpinorValue:
        u = squared_solution(mode, cfg, ext, q, branch)
        plane_wave = np.exp(-1j * mode.p3 * q.x3) / math.sqrt(2 * math.pi)
        return plane_wave * np.concatenate([u, SIGMA_3 @ u])
    return stacked


def dirac_spinor(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                 p: SpacetimePoint, branch: Branch, step: Optional[float] = None) -> SpinorValue:
    """
    Normalized solution of the Dirac equation.

    2+1: psi_{m,l} = N (Gamma P + M) u_{m,l,-1} with N = [2 eps (eps - M)]^{-1/2}
    (signed eps); the sigma label of `mode` is not used. The plus branch of a
    zero mode vanishes identically.
    3+1: Psi = N (gamma P + M) U_{m,l,sigma} with N = [4 eps (eps + p3)]^{-1/2}.
    """
    if cfg.dim is Dimension.D2PLUS1:
        base = mode.with_sigma(-1)
        omega = omega_spectrum(base, cfg, ext)
        if omega == 0 and branch is Branch.PLUS:
            return np.zeros(2, dtype=complex)
        eps = energy(omega, None, cfg.M, branch)
        norm = 1.0 / math.sqrt(2 * eps * (eps - cfg.M))
        field = lambda q: squared_solution(base, cfg, ext, q, branch)
        return norm * dirac_operator(field, p, cfg, step=step)

    if mode.p3 is None:
        raise DimensionError("3+1 spinors need the longitudinal momentum p3")
    eps = energy(omega_spectrum(mode, cfg, ext), mode.p3, cfg.M, branch)
    norm = 1.0 / math.sqrt(4 * eps * (eps + mode.p3))
    return norm * dirac_operator(_stacked_solution(mode, cfg, ext, branch), p, cfg, step=step)


def _ladder_combination(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension, p: SpacetimePoint,
                        branch: Branch, mass: float) -> SpinorValue:
    """N (Gamma P + mass) u_{m,l,-1} via the ladder relation, N = [2 eps (eps - mass)]^{-1/2}."""
    if cfg.dim is not Dimension.D2PLUS1:
        raise DimensionError("Ladder spinors are defined for 2+1 only")
    base = mode.with_sigma(-1)
    omega = omega_spectrum(base, cfg, ext)
    if omega == 0 and math.copysign(1.0, mass) == branch.sign:
        return np.zeros(2, dtype=complex)
    eps = energy(omega, None, cfg.M, branch)
    norm = 1.0 / math.sqrt(2 * eps * (eps - mass))
    value = (mass - eps) * squared_solution(base, cfg, ext, p, branch)
    if omega > 0:
        partner, sign = ladder_partner(base, cfg, ext)
        value = value + sign * 1j * math.sqrt(omega) * squared_solution(partner, cfg, ext, p, branch)
    return norm * value


def ladder_spinor(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                  p: SpacetimePoint, branch: Branch) -> SpinorValue:
    """
    2+1 spinor of dirac_spinor without finite differences:

        psi = N [(M - eps) u_{m,l,-1} + c i sqrt(omega) u_partner],

    using the ladder relation for Gamma P_perp.
    """
    return _ladder_combination(mode, cfg, ext, p, branch, cfg.M)


def spin_down_spinor(mode: ModeIndex, cfg: FieldConfiguration, ext: Extension,
                     p: SpacetimePoint, branch: Branch) -> SpinorValue:
    """
    2+1 spin-down polarization psi^(-1) = N' sigma1 (Gamma P - M) u_{m,l,-1},
    N' = [2 eps (eps + M)]^{-1/2}. It solves the Dirac equation with the
    gamma matrices (sigma3, i sigma2, i sigma1); the minus branch of a zero
    mode vanishes.
    """
    return SIGMA_1 @ _ladder_combination(mode, cfg, ext, p, branch, -cfg.M)


if __name__ == "__main__":
    demo = FieldConfiguration(eB=1.0, mu=0.3)
    for ext in Extension:
        print(f"Theta = {ext.value}")
        for sigma in (-1, 1):
            row = [omega_spectrum(ModeIndex(0, l, sigma), demo, ext) for l in range(-2, 3)]
            print(f"  sigma={sigma:+d}  omega(m=0, l=-2..2) = {row}")
