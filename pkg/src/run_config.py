"""
Run configuration for the command-line front end.

A single JSON document with sections field, extension, points, contour,
sweep, spectrum, kernel, propagate, nonrel, verify and output. Every
section has defaults; unknown keys are rejected with their field path.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

try:
    from .errors import ConfigError, ValidationError
    from .modes import Dimension, Extension, FieldConfiguration, SpacetimePoint
    from .nonrel import NonrelKind
    from .oracle import CHECKS, TruncationSpec
    from .proptime import ContourSpec, PropagatorKind
except ImportError:
    from errors import ConfigError, ValidationError
    from modes import Dimension, Extension, FieldConfiguration, SpacetimePoint
    from nonrel import NonrelKind
    from oracle import CHECKS, TruncationSpec
    from proptime import ContourSpec, PropagatorKind

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SOLENOID_GREEN_OUTPUT_DIR"
SWEEP_PARAMETERS = ("eB", "mu", "M")
FORMATS = ("csv", "json")

PointPair = Tuple[SpacetimePoint, SpacetimePoint]


def _section(data: Any, path: str, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be an object, got {type(data).__name__}", field=path)
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key {path}.{unknown[0]}; allowed: {', '.join(allowed)}",
                          field=f"{path}.{unknown[0]}")
    return data


def _number(value: Any, path: str, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}", field=path)
    if integer and int(value) != value:
        raise ConfigError(f"{path} must be an integer, got {value!r}", field=path)
    return int(value) if integer else float(value)


def _wrap(path: str, builder):
    """Run builder, reporting library validation failures against path."""
    try:
        return builder()
    except ConfigError:
        raise
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}", field=path) from e


def _point(value: Any, path: str) -> SpacetimePoint:
    if not isinstance(value, list) or len(value) not in (3, 4):
        raise ConfigError(f"{path} must be [x0, r, phi] or [x0, r, phi, x3], got {value!r}", field=path)
    coords = [_number(c, f"{path}[{i}]") for i, c in enumerate(value)]
    return _wrap(path, lambda: SpacetimePoint(*coords))


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    start: float
    stop: float
    steps: int

    def values(self) -> List[float]:
        if self.steps == 1:
            return [self.start]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class SpectrumSettings:
    """Mode grid 0 <= m <= m_max, l_min <= l <= l_max; m_max = -1 gives an empty grid."""

    m_max: int = 3
    l_min: int = 0
    l_max: int = 3
    p3: Optional[float] = None


@dataclass(frozen=True)
class KernelSettings:
    field: str = "spinor"
    s_start: float = 0.1
    s_stop: float = 2.0
    s_steps: int = 20
    s_imag: float = -0.05
    uniform: bool = False

    def s_values(self) -> List[complex]:
        reals = [self.s_start] if self.s_steps == 1 else np.linspace(self.s_start, self.s_stop, self.s_steps)
        return [complex(float(x), self.s_imag) for x in reals]


@dataclass(frozen=True)
class PropagateSettings:
    kinds: Tuple[PropagatorKind, ...] = tuple(PropagatorKind)
    quantity: str = "delta"
    field: str = "spinor"
    euclidean_time: float = 0.0
    spin: str = "up"


@dataclass(frozen=True)
class NonrelSettings:
    kind: NonrelKind = NonrelKind()
    tau: complex = 0.4
    l_window: Optional[int] = None
    radial_scan: Tuple[float, ...] = ()


@dataclass(frozen=True)
class VerifySettings:
    only: Optional[Tuple[str, ...]] = None
    tolerances: Dict[str, float] = dataclass_field(default_factory=dict)
    truncation: TruncationSpec = TruncationSpec()


@dataclass(frozen=True)
class OutputSettings:
    format: str = "csv"
    path: str = "results"


def _default_points() -> List[PointPair]:
    return [(SpacetimePoint(0.0, 1.5, 0.5), SpacetimePoint(0.0, 0.6, 0.0))]


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; `from_dict(to_dict())` reproduces it."""

    field: FieldConfiguration = FieldConfiguration(eB=1.0, mu=0.3)
    extension: Extension = Extension.MINUS_HALF_PI
    points: List[PointPair] = dataclass_field(default_factory=_default_points)
    contour: ContourSpec = ContourSpec()
    sweep: Tuple[SweepAxis, ...] = ()
    spectrum: SpectrumSettings = SpectrumSettings()
    kernel: KernelSettings = KernelSettings()
    propagate: PropagateSettings = PropagateSettings()
    nonrel: NonrelSettings = NonrelSettings()
    verify: VerifySettings = VerifySettings()
    output: OutputSettings = OutputSettings()
    threads: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build a RunConfig from parsed JSON.

        Raises:
            ConfigError: For unknown keys, wrong types or invalid values
        """
        data = _section(data, "config", ("field", "extension", "points", "contour", "sweep", "spectrum",
                                          "kernel", "propagate", "nonrel", "verify", "output", "threads"))
        return cls(
            field=_parse_field(data.get("field")),
            extension=_wrap("extension", lambda: Extension.parse(data.get("extension", "-pi/2"))),
            points=_parse_points(data.get("points")),
            contour=_parse_contour(data.get("contour")),
            sweep=_parse_sweep(data.get("sweep")),
            spectrum=_parse_spectrum(data.get("spectrum")),
            kernel=_parse_kernel(data.get("kernel")),
            propagate=_parse_propagate(data.get("propagate")),
            nonrel=_parse_nonrel(data.get("nonrel")),
            verify=_parse_verify(data.get("verify")),
            output=_parse_output(data.get("output")),
            threads=_positive_int(data.get("threads", 1), "threads"),
        )

    def to_dict(self) -> Dict[str, Any]:
        cfg = self.field
        tau = complex(self.nonrel.tau)
        return {
            "field": {"eB": cfg.eB, "l0": cfg.l0, "mu": cfg.mu, "M": cfg.M, "dim": cfg.dim.value},
            "extension": self.extension.value,
            "points": [{"x": [p.x0, p.r, p.phi, p.x3], "x_prime": [q.x0, q.r, q.phi, q.x3]} for p, q in self.points],
            "contour": self.contour.to_dict(),
            "sweep": [{"parameter": a.parameter, "start": a.start, "stop": a.stop, "steps": a.steps}
                      for a in self.sweep],
            "spectrum": {"m_max": self.spectrum.m_max, "l_min": self.spectrum.l_min, "l_max": self.spectrum.l_max,
                         "p3": self.spectrum.p3},
            "kernel": {"field": self.kernel.field, "s_start": self.kernel.s_start, "s_stop": self.kernel.s_stop,
                       "s_steps": self.kernel.s_steps, "s_imag": self.kernel.s_imag, "uniform": self.kernel.uniform},
            "propagate": {"kinds": [k.value for k in self.propagate.kinds], "quantity": self.propagate.quantity,
                          "field": self.propagate.field, "euclidean_time": self.propagate.euclidean_time,
                          "spin": self.propagate.spin},
            "nonrel": {"species": self.nonrel.kind.species.value, "spin": self.nonrel.kind.spin.value,
                       "tau": tau.real, "tau_imag": tau.imag, "l_window": self.nonrel.l_window,
                       "radial_scan": list(self.nonrel.radial_scan)},
            "verify": {"only": None if self.verify.only is None else list(self.verify.only),
                       "tolerances": dict(self.verify.tolerances), "truncation": self.verify.truncation.to_dict()},
            "output": {"format": self.output.format, "path": self.output.path},
            "threads": self.threads,
        }

    def field_variants(self) -> List[Tuple[Dict[str, float], FieldConfiguration]]:
        """Cartesian product of the sweep axes applied to the base field, in row-major order."""
        if not self.sweep:
            return [({}, self.field)]
        names = [axis.parameter for axis in self.sweep]
        variants = []
        for combo in itertools.product(*(axis.values() for axis in self.sweep)):
            changes = dict(zip(names, combo))
            variants.append((changes, _wrap("sweep", lambda: self.field.replace(**changes))))
        return variants

    def output_dir(self) -> str:
        return os.environ.get(OUTPUT_DIR_ENV) or self.output.path


def _positive_int(value: Any, path: str, minimum: int = 1) -> int:
    number = _number(value, path, integer=True)
    if number < minimum:
        raise ConfigError(f"{path} must be >= {minimum}, got {number}", field=path)
    return number


def _parse_field(data: Any) -> FieldConfiguration:
    data = _section(data, "field", ("eB", "l0", "mu", "M", "dim"))
    values: Dict[str, Any] = {"eB": 1.0, "mu": 0.3}
    values.update({key: _number(data[key], f"field.{key}", integer=(key == "l0"))
                   for key in ("eB", "l0", "mu", "M") if key in data})
    dim = data.get("dim", Dimension.D2PLUS1.value)
    try:
        values["dim"] = Dimension(dim)
    except ValueError as e:
        raise ConfigError(f"field.dim must be one of {[d.value for d in Dimension]}, got {dim!r}",
                          field="field.dim") from e
    return _wrap("field", lambda: FieldConfiguration(**values))


def _parse_points(data: Any) -> List[PointPair]:
    if data is None:
        return _default_points()
    if not isinstance(data, list):
        raise ConfigError("points must be a list of {x, x_prime} objects", field="points")
    pairs = []
    for i, entry in enumerate(data):
        entry = _section(entry, f"points[{i}]", ("x", "x_prime"))
        if "x" not in entry or "x_prime" not in entry:
            raise ConfigError(f"points[{i}] needs both x and x_prime", field=f"points[{i}]")
        pairs.append((_point(entry["x"], f"points[{i}].x"), _point(entry["x_prime"], f"points[{i}].x_prime")))
    return pairs


def _parse_contour(data: Any) -> ContourSpec:
    data = _section(data, "contour", ("kind", "theta", "delta", "T", "order"))
    values = {key: value for key, value in data.items() if value is not None}
    for key in ("theta", "delta", "T"):
        if key in values:
            values[key] = _number(values[key], f"contour.{key}")
    if "order" in values:
        values["order"] = _number(values["order"], "contour.order", integer=True)
    return _wrap("contour", lambda: ContourSpec(**values))


def _parse_sweep(data: Any) -> Tuple[SweepAxis, ...]:
    if data is None:
        return ()
    if not isinstance(data, list):
        raise ConfigError("sweep must be a list of axes", field="sweep")
    axes = []
    for i, entry in enumerate(data):
        path = f"sweep[{i}]"
        entry = _section(entry, path, ("parameter", "start", "stop", "steps"))
        name = entry.get("parameter")
        if name not in SWEEP_PARAMETERS:
            raise ConfigError(f"{path}.parameter must be one of {SWEEP_PARAMETERS}, got {name!r}",
                              field=f"{path}.parameter")
        for key in ("start", "stop"):
            if key not in entry:
                raise ConfigError(f"{path}.{key} is required", field=f"{path}.{key}")
        axes.append(SweepAxis(name, _number(entry["start"], f"{path}.start"), _number(entry["stop"], f"{path}.stop"),
                              _positive_int(entry.get("steps", 1), f"{path}.steps")))
    return tuple(axes)


def _parse_spectrum(data: Any) -> SpectrumSettings:
    data = _section(data, "spectrum", ("m_max", "l_min", "l_max", "p3"))
    defaults = SpectrumSettings()
    p3 = data.get("p3")
    return SpectrumSettings(
        m_max=_positive_int(data.get("m_max", defaults.m_max), "spectrum.m_max", minimum=-1),
        l_min=_number(data.get("l_min", defaults.l_min), "spectrum.l_min", integer=True),
        l_max=_number(data.get("l_max", defaults.l_max), "spectrum.l_max", integer=True),
        p3=None if p3 is None else _number(p3, "spectrum.p3"),
    )


def _choice(value: Any, path: str, options: Tuple[str, ...]) -> str:
    if value not in options:
        raise ConfigError(f"{path} must be one of {options}, got {value!r}", field=path)
    return value


def _parse_kernel(data: Any) -> KernelSettings:
    data = _section(data, "kernel", ("field", "s_start", "s_stop", "s_steps", "s_imag", "uniform"))
    defaults = KernelSettings()
    uniform = data.get("uniform", defaults.uniform)
    if not isinstance(uniform, bool):
        raise ConfigError(f"kernel.uniform must be true or false, got {uniform!r}", field="kernel.uniform")
    s_imag = _number(data.get("s_imag", defaults.s_imag), "kernel.s_imag")
    if s_imag > 0:
        raise ConfigError(f"kernel.s_imag must be <= 0, got {s_imag}", field="kernel.s_imag")
    return KernelSettings(
        field=_choice(data.get("field", defaults.field), "kernel.field", ("spinor", "scalar")),
        s_start=_number(data.get("s_start", defaults.s_start), "kernel.s_start"),
        s_stop=_number(data.get("s_stop", defaults.s_stop), "kernel.s_stop"),
        s_steps=_positive_int(data.get("s_steps", defaults.s_steps), "kernel.s_steps"),
        s_imag=s_imag,
        uniform=uniform,
    )


def _parse_propagate(data: Any) -> PropagateSettings:
    data = _section(data, "propagate", ("kinds", "quantity", "field", "euclidean_time", "spin"))
    defaults = PropagateSettings()
    kinds = data.get("kinds")
    if kinds is None:
        parsed = defaults.kinds
    else:
        if not isinstance(kinds, list) or not kinds:
            raise ConfigError("propagate.kinds must be a non-empty list", field="propagate.kinds")
        try:
            parsed = tuple(PropagatorKind(k) for k in kinds)
        except ValueError as e:
            raise ConfigError(f"propagate.kinds: {e}", field="propagate.kinds") from e
    delta = _number(data.get("euclidean_time", defaults.euclidean_time), "propagate.euclidean_time")
    if delta < 0:
        raise ConfigError(f"propagate.euclidean_time must be >= 0, got {delta}", field="propagate.euclidean_time")
    quantity = _choice(data.get("quantity", defaults.quantity), "propagate.quantity", ("delta", "propagator"))
    field = _choice(data.get("field", defaults.field), "propagate.field", ("spinor", "scalar"))
    spin = _choice(data.get("spin", defaults.spin), "propagate.spin", ("up", "down"))
    if spin == "down" and (quantity, field) != ("propagator", "spinor"):
        raise ConfigError("propagate.spin 'down' needs quantity 'propagator' and field 'spinor'",
                          field="propagate.spin")
    return PropagateSettings(kinds=parsed, quantity=quantity, field=field, euclidean_time=delta, spin=spin)


def _parse_nonrel(data: Any) -> NonrelSettings:
    data = _section(data, "nonrel", ("species", "spin", "tau", "tau_imag", "l_window", "radial_scan"))
    kind = _wrap("nonrel", lambda: NonrelKind(data.get("species", "particle"), data.get("spin", "up")))
    tau = complex(_number(data.get("tau", 0.4), "nonrel.tau"), _number(data.get("tau_imag", 0.0), "nonrel.tau_imag"))
    l_window = data.get("l_window")
    scan = data.get("radial_scan", [])
    if not isinstance(scan, list):
        raise ConfigError("nonrel.radial_scan must be a list of radii", field="nonrel.radial_scan")
    radii = tuple(_number(r, f"nonrel.radial_scan[{i}]") for i, r in enumerate(scan))
    if any(r <= 0 for r in radii):
        raise ConfigError("nonrel.radial_scan radii must be positive", field="nonrel.radial_scan")
    return NonrelSettings(kind=kind, tau=tau,
                          l_window=None if l_window is None else _positive_int(l_window, "nonrel.l_window", 0),
                          radial_scan=radii)


def _parse_verify(data: Any) -> VerifySettings:
    data = _section(data, "verify", ("only", "tolerances", "truncation"))
    only = data.get("only")
    if only is not None:
        if not isinstance(only, list):
            raise ConfigError("verify.only must be a list of check ids", field="verify.only")
        for check_id in only:
            if check_id not in CHECKS:
                raise ConfigError(f"Unknown check id {check_id!r}", field="verify.only")
        only = tuple(only)
    tolerances = _section(data.get("tolerances"), "verify.tolerances", tuple(CHECKS))
    parsed = {}
    for check_id, value in tolerances.items():
        limit = _number(value, f"verify.tolerances.{check_id}")
        if not limit > 0 or not np.isfinite(limit):
            raise ConfigError(f"verify.tolerances.{check_id} must be a positive finite number, got {value!r}",
                              field=f"verify.tolerances.{check_id}")
        parsed[check_id] = limit
    trunc = _section(data.get("truncation"), "verify.truncation", ("m_max", "l_max", "damping", "extrapolation"))
    truncation = _wrap("verify.truncation", lambda: TruncationSpec(**trunc))
    return VerifySettings(only=only, tolerances=parsed, truncation=truncation)


def _parse_output(data: Any) -> OutputSettings:
    data = _section(data, "output", ("format", "path"))
    path = data.get("path", OutputSettings.path)
    if not isinstance(path, str) or not path:
        raise ConfigError("output.path must be a non-empty string", field="output.path")
    return OutputSettings(format=_choice(data.get("format", "csv"), "output.format", FORMATS), path=path)


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """
    Load and validate a JSON run configuration; defaults when path is None.

    Raises:
        ConfigError: For unreadable files, malformed JSON (with line and column) or schema violations
    """
    if path is None:
        return RunConfig()
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e
    logger.debug("Loaded config %s", path)
    return RunConfig.from_dict(data)
