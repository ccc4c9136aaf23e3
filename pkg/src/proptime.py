"""
Proper-time integration of the kernels along deformed contours.

Delta^c = int_0^inf f ds and Delta^cbar = int_{-0}^{-inf} f ds are computed
on contours that avoid every pole s_k = k pi/gamma from below and follow a
ray on which e^{-i M^2 s} decays. Spacelike and imaginary-time pairs leave
s = 0 into the lower half-plane; timelike pairs leave it into the upper
half-plane and cross the real axis before the first pole. The first-order
Dirac operator turns Delta into S^c, S^cbar; step-function combinations give
the commutation, retarded and advanced functions.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

try:
    from .errors import ContourError, ConvergenceError, DimensionError, SupportError, TailBoundError, ValidationError
    from .kernels import ReducedCoordinates, f_scalar, f_total, reduce
    from .modes import SIGMA_1, Dimension, Extension, FieldConfiguration, SpacetimePoint, dirac_operator
except ImportError:
    from errors import ContourError, ConvergenceError, DimensionError, SupportError, TailBoundError, ValidationError
    from kernels import ReducedCoordinates, f_scalar, f_total, reduce
    from modes import SIGMA_1, Dimension, Extension, FieldConfiguration, SpacetimePoint, dirac_operator

logger = logging.getLogger(__name__)

Kernel = Callable[[NDArray[np.complex128]], NDArray[np.complex128]]

# e^{-SMALL_S_EXPONENT} bounds both the discarded contour tail and the start segment
SMALL_S_EXPONENT = 28.0
TAIL_BOUND = 1e-12
RELATIVE_TOLERANCE = 1e-6
GEOMETRIC_RATIO = 1.5
ORDER_INCREMENT = 8
PANELS_PER_BATCH = 16
CANCELLATION_WARN = 1e4
CANCELLATION_LIMIT = 1e10


class ContourKind(Enum):
    BENT_RAY = "bent_ray"
    ROTATED_RAY = "rotated_ray"
    SHIFTED_LINE = "shifted_line"


class PropagatorKind(Enum):
    CAUSAL = "causal"
    ANTICAUSAL = "anticausal"
    COMMUTATION = "commutation"
    RETARDED = "retarded"
    ADVANCED = "advanced"


class MassSign(Enum):
    PLUS_M = 1
    MINUS_M = -1


@dataclass(frozen=True)
class ContourSpec:
    """
    Integration path in the complex s plane.

    ROTATED_RAY: s = t e^{-i theta}, t in (0, T], T defaults to 28/(M^2 sin theta).
    BENT_RAY: the rotated ray when it damps the pair near s = 0. Otherwise
    s = t e^{+i theta} up to the apex a = l e^{i theta}, the chord from a to
    s_c = pi/(2 gamma), then s = s_c + t e^{-i theta}, t in [0, T];
    l = min(s_c/(2 cos theta), 1/(M^2 sin theta)) keeps |e^{-i M^2 s}| <= e.
    SHIFTED_LINE: the segment from 0 to -i delta followed by s = t - i delta,
    t in [0, T]; delta defaults to 28/M^2 and T to delta.
    Each panel uses Gauss-Legendre rules of `order` and `order + 8` nodes.
    """

    kind: ContourKind = ContourKind.BENT_RAY
    theta: float = 0.35
    delta: Optional[float] = None
    T: Optional[float] = None
    order: int = 16

    def __post_init__(self):
        if not isinstance(self.kind, ContourKind):
            try:
                object.__setattr__(self, "kind", ContourKind(self.kind))
            except ValueError as e:
                raise ValidationError(f"Unknown contour kind {self.kind!r}") from e
        if not 0.0 < self.theta < math.pi / 2:
            raise ValidationError(f"Ray angle must lie in (0, pi/2), got {self.theta}")
        if self.delta is not None and not self.delta > 0:
            raise ValidationError(f"Line shift delta must be positive, got {self.delta}")
        if self.T is not None and not self.T > 0:
            raise ValidationError(f"Truncation T must be positive, got {self.T}")
        if int(self.order) != self.order or self.order < 2:
            raise ValidationError(f"Quadrature order must be an integer >= 2, got {self.order}")

    def shift(self, M: float) -> float:
        return SMALL_S_EXPONENT / M ** 2 if self.delta is None else self.delta

    def truncation(self, M: float) -> float:
        if self.T is not None:
            return self.T
        if self.kind is not ContourKind.SHIFTED_LINE:
            return SMALL_S_EXPONENT / (M ** 2 * math.sin(self.theta))
        return self.shift(M)

    def tail_bound(self, M: float) -> float:
        """Bound on |e^{-i M^2 s}| where the contour is cut off."""
        if self.kind is not ContourKind.SHIFTED_LINE:
            return math.exp(-M ** 2 * self.truncation(M) * math.sin(self.theta))
        return math.exp(-M ** 2 * self.shift(M))

    def check_tail(self, M: float) -> None:
        bound = self.tail_bound(M)
        if bound > TAIL_BOUND:
            raise TailBoundError(f"Contour tail bound {bound:.3g} exceeds {TAIL_BOUND:g}; "
                                 f"increase T (or delta) for M = {M}")

    def segments(self, M: float, anticausal: bool = False, gamma: float = 1.0,
                 bend: bool = False) -> List[Tuple[complex, complex, float]]:
        """
        Straight pieces (start, direction, length) with s = start + direction * t.

        bend selects the path through the upper half-plane of a BENT_RAY;
        other kinds ignore it. The anticausal contour is the mirror image
        s -> -conj(s).
        """
        lower_ray = complex(np.exp(-1j * self.theta))
        if self.kind is ContourKind.SHIFTED_LINE:
            delta = self.shift(M)
            pieces = [(0j, -1j, delta), (-1j * delta, 1 + 0j, self.truncation(M))]
        elif self.kind is ContourKind.BENT_RAY and bend:
            crossing = math.pi / (2 * gamma)
            reach = min(crossing / (2 * math.cos(self.theta)), 1.0 / (M ** 2 * math.sin(self.theta)))
            apex = reach * lower_ray.conjugate()
            chord = crossing - apex
            pieces = [(0j, lower_ray.conjugate(), reach), (apex, chord / abs(chord), abs(chord)),
                      (complex(crossing), lower_ray, self.truncation(M))]
        else:
            pieces = [(0j, lower_ray, self.truncation(M))]
        if anticausal:
            pieces = [(-start.conjugate(), -direction.conjugate(), length) for start, direction, length in pieces]
        return pieces

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, "theta": self.theta, "delta": self.delta, "T": self.T, "order": self.order}


@dataclass(frozen=True)
class IntegrationResult:
    value: NDArray[np.complex128]
    error: float
    panels: int


@dataclass(frozen=True)
class PropagatorResult:
    value: NDArray[np.complex128]
    error: float
    integrals: int


@functools.lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    return np.polynomial.legendre.leggauss(order)


def _separations(rc: ReducedCoordinates, cfg: FieldConfiguration, dim: Dimension,
                 dx_extra: Sequence[float] = ()) -> Tuple[complex, complex, complex]:
    """Invariant interval I and its smallest and largest values over the relative angle."""
    longitudinal = sum(float(dx) ** 2 for dx in dx_extra)
    if dim is Dimension.D3PLUS1:
        longitudinal += float(rc.dx3) ** 2
    dx0_sq = complex(rc.dx0) ** 2
    interval = complex(rc.transverse_distance_sq(cfg)) + longitudinal - dx0_sq
    closest = complex(rc.radial_gap_sq(cfg)) + longitudinal - dx0_sq
    farthest = complex(rc.radial_sum_sq(cfg)) + longitudinal - dx0_sq
    return interval, closest, farthest


def _damping(interval: complex, direction: complex) -> float:
    """c in |exp{i I/(4s)}| = e^{-c/t} along s = d t."""
    return -(1j * interval / (4 * direction)).real


def _start_offset(interval: complex, closest: complex, farthest: complex, direction: complex) -> float:
    """
    First node of the segment leaving s = 0.

    The kernel behaves like exp{i I/(4s)} near the origin; along s = d t this is
    e^{-c/t} with c = -Re(i I/(4d)). The integration starts where c/t = 28.
    Below the real axis the Bessel terms grow like the closest interval and
    cancel down to I; above it the diffracted wave carries the farthest one.
    """
    damping = _damping(interval, direction)
    if direction.imag > 0:
        damping = min(damping, _damping(farthest, direction))
        if damping <= 0:
            raise ContourError(f"Separation with interval {interval:.6g} lies inside the direct light cone "
                               "but outside the diffracted one (|dx| < |dx0| < r + r'); "
                               "no contour damps both waves near s = 0")
        return damping / SMALL_S_EXPONENT
    if damping <= 0:
        raise ContourError(f"Separation with interval {interval:.6g} is not damped on this contour; "
                           "timelike separations need the bent_ray contour")
    worst = _damping(closest, direction)
    cancellation = math.exp(min(SMALL_S_EXPONENT * (damping - worst) / damping, 700.0))
    if cancellation > CANCELLATION_LIMIT:
        raise ContourError(f"Cancellation factor {cancellation:.3g} near s = 0 exceeds {CANCELLATION_LIMIT:g}")
    if cancellation > CANCELLATION_WARN:
        logger.warning("Cancellation factor %.3g near s = 0: expect reduced accuracy", cancellation)
    return damping / SMALL_S_EXPONENT


def _panels(start: float, length: float, width: float, geometric: bool) -> List[Tuple[float, float]]:
    edges = [start]
    if geometric:
        while edges[-1] * (GEOMETRIC_RATIO - 1) < width and edges[-1] * GEOMETRIC_RATIO < length:
            edges.append(edges[-1] * GEOMETRIC_RATIO)
    while edges[-1] < length:
        edges.append(min(edges[-1] + width, length))
    return list(zip(edges[:-1], edges[1:]))


def _integrate(kernel: Kernel, rc: ReducedCoordinates, cfg: FieldConfiguration, contour: ContourSpec,
               anticausal: bool, dim: Dimension, dx_extra: Sequence[float] = (),
               threads: int = 1) -> IntegrationResult:
    contour.check_tail(cfg.M)
    interval, closest, farthest = _separations(rc, cfg, dim, dx_extra)
    width = min(1.0, 2.0 / cfg.M ** 2, 1.0 / cfg.gamma)
    ray = complex(np.exp(-1j * contour.theta))
    bend = _damping(interval, -ray.conjugate() if anticausal else ray) <= 0

    tasks = []
    for index, (start, direction, length) in enumerate(contour.segments(cfg.M, anticausal, cfg.gamma, bend)):
        t0 = _start_offset(interval, closest, farthest, direction) if index == 0 else 0.0
        if t0 >= length:
            raise ContourError(f"Separation too large for the contour truncation (start {t0:.4g} >= {length:.4g})")
        tasks.extend((start, direction, a, b) for a, b in _panels(t0, length, width, geometric=index == 0))
    logger.debug("Integrating over %d panels (%s, anticausal=%s, bent=%s)", len(tasks), contour.kind.value,
                 anticausal, bend and contour.kind is ContourKind.BENT_RAY)

    coarse = _gauss_legendre(contour.order)
    fine = _gauss_legendre(contour.order + ORDER_INCREMENT)

    def rule(batch, nodes_weights):
        nodes, weights = nodes_weights
        s_parts, w_parts = [], []
        for start, direction, a, b in batch:
            half = 0.5 * (b - a)
            s_parts.append(start + direction * (half * nodes + 0.5 * (a + b)))
            w_parts.append(direction * half * weights)
        s_nodes = np.concatenate(s_parts)
        w_nodes = np.concatenate(w_parts)
        return np.tensordot(w_nodes, kernel(s_nodes), axes=1)

    def run(batch):
        return rule(batch, coarse), rule(batch, fine)

    batches = [tasks[i:i + PANELS_PER_BATCH] for i in range(0, len(tasks), PANELS_PER_BATCH)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        partials = list(pool.map(run, batches))
    low = sum(part[0] for part in partials)
    high = sum(part[1] for part in partials)
    error = float(np.abs(high - low).max())
    scale = float(np.abs(high).max())
    if error > RELATIVE_TOLERANCE * scale:
        raise ConvergenceError(f"Proper-time quadrature error {error:.3g} exceeds "
                               f"{RELATIVE_TOLERANCE:g} x |value| = {RELATIVE_TOLERANCE * scale:.3g}")
    return IntegrationResult(value=high, error=error, panels=len(tasks))


def integrate_causal(rc: ReducedCoordinates, cfg: FieldConfiguration,
                     ext: Extension = Extension.MINUS_HALF_PI, dim: Optional[Dimension] = None,
                     contour: Optional[ContourSpec] = None, threads: int = 1) -> IntegrationResult:
    """
    Delta^c(x, x') = int_0^inf f(x, x', s) ds.

    Raises:
        TailBoundError: If the contour is cut off too early
        ContourError: If the contour does not damp the separation near s = 0
        ConvergenceError: If the two quadrature rules disagree
    """
    dim = cfg.dim if dim is None else dim
    contour = ContourSpec() if contour is None else contour
    return _integrate(lambda s: f_total(s, rc, cfg, ext, dim), rc, cfg, contour, False, dim, threads=threads)


def integrate_anticausal(rc: ReducedCoordinates, cfg: FieldConfiguration,
                         ext: Extension = Extension.MINUS_HALF_PI, dim: Optional[Dimension] = None,
                         contour: Optional[ContourSpec] = None, threads: int = 1) -> IntegrationResult:
    """Delta^cbar(x, x') = int_{-0}^{-inf} f(x, x', s) ds on the mirrored contour (arg s = -pi + 0)."""
    dim = cfg.dim if dim is None else dim
    contour = ContourSpec() if contour is None else contour
    return _integrate(lambda s: f_total(s, rc, cfg, ext, dim), rc, cfg, contour, True, dim, threads=threads)


def integrate_scalar(rc: ReducedCoordinates, cfg: FieldConfiguration, contour: Optional[ContourSpec] = None,
                     anticausal: bool = False, D: int = 2, dx_extra: Sequence[float] = (),
                     threads: int = 1) -> IntegrationResult:
    """Klein-Gordon Delta^c (or Delta^cbar) in D spatial dimensions."""
    contour = ContourSpec() if contour is None else contour
    return _integrate(lambda s: f_scalar(s, rc, cfg, D, dx_extra), rc, cfg, contour, anticausal,
                      Dimension.D2PLUS1, dx_extra, threads)


class PropagatorField:
    """
    Delta(x, x') as a function of x for fixed x'.

    Values are memoized on Cartesian coordinates rounded to 1e-12, so stacked
    finite-difference stencils reuse shared points. time_shift is added to
    dx0 (an imaginary shift gives imaginary-time evaluation).
    """

    def __init__(self, p_prime: SpacetimePoint, cfg: FieldConfiguration,
                 ext: Extension = Extension.MINUS_HALF_PI, contour: Optional[ContourSpec] = None,
                 anticausal: bool = False, time_shift: complex = 0.0, threads: int = 1):
        self.p_prime = p_prime
        self.cfg = cfg
        self.ext = ext
        self.contour = ContourSpec() if contour is None else contour
        self.anticausal = anticausal
        self.time_shift = time_shift
        self.threads = threads
        self.max_error = 0.0
        self._cache: Dict[Tuple[float, ...], NDArray[np.complex128]] = {}

    @property
    def evaluations(self) -> int:
        return len(self._cache)

    def __call__(self, p: SpacetimePoint) -> NDArray[np.complex128]:
        key = tuple(round(c, 12) for c in p.cartesian())
        if key not in self._cache:
            rc = reduce(p, self.p_prime, self.cfg, self.time_shift)
            integrate = integrate_anticausal if self.anticausal else integrate_causal
            result = integrate(rc, self.cfg, self.ext, contour=self.contour, threads=self.threads)
            self.max_error = max(self.max_error, result.error)
            self._cache[key] = result.value
        return self._cache[key]


def apply_dirac_operator(delta_field: Callable[[SpacetimePoint], NDArray], p: SpacetimePoint,
                         cfg: FieldConfiguration, sign: MassSign = MassSign.PLUS_M,
                         step: Optional[float] = None) -> NDArray[np.complex128]:
    """
    (gamma^nu P_nu +- M) Delta at p, derivatives by Richardson-extrapolated
    central differences.

    Raises:
        AxisError: If the stencil comes within 10 steps of the axis
    """
    return dirac_operator(delta_field, p, cfg, mass_sign=sign.value, step=step)


def causal_propagator(p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration,
                      ext: Extension = Extension.MINUS_HALF_PI, contour: Optional[ContourSpec] = None,
                      anticausal: bool = False, time_shift: complex = 0.0,
                      step: Optional[float] = None, threads: int = 1, spin: int = 1) -> PropagatorResult:
    """
    S^c = (gamma P + M) Delta^c, or S^cbar with anticausal=True; spin = -1
    gives the spin-down polarization of 2+1.

    Raises:
        ValidationError: For spin other than +1 or -1
        DimensionError: For spin = -1 outside 2+1
    """
    if spin not in (1, -1):
        raise ValidationError(f"spin must be +1 or -1, got {spin}")
    field = PropagatorField(p_prime, cfg, ext, contour, anticausal, time_shift, threads)
    if spin == 1:
        value = apply_dirac_operator(field, p, cfg, MassSign.PLUS_M, step)
    else:
        value = spin_down_propagator(field, p, cfg, step)
    return PropagatorResult(value=value, error=field.max_error, integrals=field.evaluations)


def spin_down_propagator(delta_field: Callable[[SpacetimePoint], NDArray], p: SpacetimePoint,
                         cfg: FieldConfiguration, step: Optional[float] = None) -> NDArray[np.complex128]:
    """
    Spin-down polarization in 2+1: S_(-1) = -sigma1 (Gamma P - M) Delta sigma1.

    Raises:
        DimensionError: Outside 2+1
    """
    if cfg.dim is not Dimension.D2PLUS1:
        raise DimensionError("The spin-down propagator exists only in 2+1 dimensions")
    return -SIGMA_1 @ apply_dirac_operator(delta_field, p, cfg, MassSign.MINUS_M, step) @ SIGMA_1


def assemble(kind: PropagatorKind, s_causal: NDArray, s_anticausal: NDArray, dx0: float) -> NDArray:
    """
    S = sgn(dx0)(S^c - S^cbar), S^ret = theta(dx0) S, S^adv = -theta(-dx0) S.

    Raises:
        SupportError: dx0 = 0 for any step-function combination
    """
    kind = PropagatorKind(kind)
    if kind is PropagatorKind.CAUSAL:
        return s_causal
    if kind is PropagatorKind.ANTICAUSAL:
        return s_anticausal
    if dx0 == 0:
        raise SupportError(f"{kind.value} function is undefined at dx0 = 0")
    commutation = math.copysign(1.0, dx0) * (np.asarray(s_causal) - np.asarray(s_anticausal))
    if kind is PropagatorKind.COMMUTATION:
        return commutation
    if kind is PropagatorKind.RETARDED:
        return commutation if dx0 > 0 else np.zeros_like(commutation)
    return -commutation if dx0 < 0 else np.zeros_like(commutation)


def dirac_residual(p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration,
                   ext: Extension = Extension.MINUS_HALF_PI, contour: Optional[ContourSpec] = None,
                   time_shift: complex = 0.0, step: Optional[float] = None, threads: int = 1) -> float:
    """||(gamma P - M) S^c|| / ||S^c|| at p != p' from two stacked difference stencils."""
    field = PropagatorField(p_prime, cfg, ext, contour, False, time_shift, threads)

    def causal(q: SpacetimePoint) -> NDArray:
        return apply_dirac_operator(field, q, cfg, MassSign.PLUS_M, step)

    s_causal = causal(p)
    residual = apply_dirac_operator(causal, p, cfg, MassSign.MINUS_M, step)
    logger.debug("Dirac residual used %d contour integrals", field.evaluations)
    return float(np.linalg.norm(residual) / np.linalg.norm(s_causal))


if __name__ == "__main__":
    demo = FieldConfiguration(eB=1.0, mu=0.3)
    x = SpacetimePoint(x0=0.0, r=1.2, phi=0.7)
    x_prime = SpacetimePoint(x0=0.0, r=0.8, phi=0.0)
    rc_demo = reduce(x, x_prime, demo, time_shift=-1.0j)
    for contour_demo in (ContourSpec(theta=0.3), ContourSpec(theta=0.5),
                         ContourSpec(kind=ContourKind.SHIFTED_LINE)):
        result = integrate_causal(rc_demo, demo, contour=contour_demo)
        print(f"{contour_demo.kind.value:>13} theta={contour_demo.theta}: "
              f"Delta^c diag = {np.diag(result.value)}, error {result.error:.2e}, {result.panels} panels")
    timelike = reduce(SpacetimePoint(x0=3.0, r=0.6, phi=0.4), SpacetimePoint(x0=0.0, r=0.5, phi=0.0), demo)
    for theta_demo in (0.3, 0.5):
        result = integrate_causal(timelike, demo, contour=ContourSpec(theta=theta_demo))
        print(f"timelike theta={theta_demo}: Delta^c diag = {np.diag(result.value)}, {result.panels} panels")
