"""
Command implementations behind main.py.

Each command turns a RunConfig into a table (rows plus a fixed column
order) or a report. Sweep variants and point pairs are evaluated on a
thread pool; results are collected in input order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from .errors import PoleError, SupportError, ValidationError
    from .kernels import f_scalar, f_total, f_uniform, reduce
    from .modes import Branch, Dimension, FieldConfiguration, ModeIndex, SpacetimePoint, energy, omega_spectrum
    from .nonrel import nonrel_critical, nonrel_retarded
    from .oracle import CheckResult, run_suite
    from .proptime import (assemble, causal_propagator, integrate_anticausal, integrate_causal,
                           integrate_scalar)
    from .result_writer import split_complex
    from .run_config import RunConfig
except ImportError:
    from errors import PoleError, SupportError, ValidationError
    from kernels import f_scalar, f_total, f_uniform, reduce
    from modes import Branch, Dimension, FieldConfiguration, ModeIndex, SpacetimePoint, energy, omega_spectrum
    from nonrel import nonrel_critical, nonrel_retarded
    from oracle import CheckResult, run_suite
    from proptime import (assemble, causal_propagator, integrate_anticausal, integrate_causal,
                          integrate_scalar)
    from result_writer import split_complex
    from run_config import RunConfig

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ["m", "l", "sigma", "p3", "theta", "sgnB", "omega", "eps_plus", "eps_minus"]
KERNEL_COLUMNS = ["pair", "s_re", "s_im", "i", "j", "value_re", "value_im", "flag"]
PROPAGATE_COLUMNS = ["pair", "kind", "i", "j", "value_re", "value_im", "error", "flag"]
NONREL_COLUMNS = ["pair", "scan", "r", "phi", "tau_re", "tau_im", "value_re", "value_im",
                  "s0_re", "s0_im", "abs_s0"]

Table = Tuple[List[str], List[Dict[str, Any]]]


def _ordered_map(fn: Callable, items: Sequence, threads: int) -> List:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(fn, items))


def _sweep_table(run: RunConfig, columns: List[str], per_variant: Callable[[FieldConfiguration], List[Dict]],
                 threads: int) -> Table:
    """Evaluate per_variant for every sweep variant, prefixing the swept parameters as columns."""
    variants = run.field_variants()
    names = [axis.parameter for axis in run.sweep]
    batches = _ordered_map(lambda variant: per_variant(variant[1]), variants, threads)
    rows = []
    for (changes, _), batch in zip(variants, batches):
        rows.extend({**changes, **row} for row in batch)
    return names + columns, rows


def _matrix_rows(value: np.ndarray, base: Dict[str, Any]) -> List[Dict[str, Any]]:
    matrix = np.atleast_2d(value)
    rows = []
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            rows.append({**base, "i": i, "j": j, **split_complex("value", matrix[i, j])})
    return rows


def cmd_spectrum(run: RunConfig, threads: int = 1) -> Table:
    """Tabulate omega and eps_+- over the configured mode grid."""
    settings = run.spectrum

    def rows_for(cfg: FieldConfiguration) -> List[Dict[str, Any]]:
        p3 = settings.p3 if cfg.dim is Dimension.D3PLUS1 else None
        if cfg.dim is Dimension.D3PLUS1 and p3 is None:
            p3 = 0.0
        rows = []
        for m in range(settings.m_max + 1):
            for l in range(settings.l_min, settings.l_max + 1):
                for sigma in (-1, 1):
                    omega = omega_spectrum(ModeIndex(m, l, sigma, p3), cfg, run.extension)
                    rows.append({"m": m, "l": l, "sigma": sigma, "p3": p3, "theta": run.extension.value,
                                 "sgnB": cfg.xi, "omega": omega,
                                 "eps_plus": energy(omega, p3, cfg.M, Branch.PLUS),
                                 "eps_minus": energy(omega, p3, cfg.M, Branch.MINUS)})
        return rows

    return _sweep_table(run, SPECTRUM_COLUMNS, rows_for, threads)


def cmd_kernel(run: RunConfig, threads: int = 1) -> Table:
    """
    Kernel values on the s grid for every point pair; s values too close to
    a pole are kept as NaN rows flagged 'pole'.
    """
    settings = run.kernel

    def evaluate(s: complex, rc, cfg: FieldConfiguration):
        if settings.field == "scalar":
            if cfg.dim is Dimension.D3PLUS1:
                return f_scalar(s, rc, cfg, D=3, dx_extra=(rc.dx3,))
            return f_scalar(s, rc, cfg)
        if settings.uniform:
            return f_uniform(s, rc, cfg)
        return f_total(s, rc, cfg, run.extension)

    def rows_for(cfg: FieldConfiguration) -> List[Dict[str, Any]]:
        size = 1 if settings.field == "scalar" else cfg.dim.spinor_size
        rows = []
        for pair, (p, p_prime) in enumerate(run.points):
            rc = reduce(p, p_prime, cfg)
            for s in settings.s_values():
                base = {"pair": pair, "s_re": s.real, "s_im": s.imag}
                try:
                    value = evaluate(s, rc, cfg)
                    flag = ""
                except PoleError:
                    logger.warning("Kernel at s=%s sits on a pole of 1/sin(gamma s)", s)
                    value = np.full((size, size), complex(np.nan, np.nan))
                    flag = "pole"
                rows.extend({**row, "flag": flag} for row in _matrix_rows(value, base))
        return rows

    return _sweep_table(run, KERNEL_COLUMNS, rows_for, threads)


def _delta_pair(run: RunConfig, cfg: FieldConfiguration, p: SpacetimePoint, p_prime: SpacetimePoint,
                threads: int) -> Tuple[np.ndarray, np.ndarray, float]:
    settings = run.propagate
    shift = -1j * settings.euclidean_time if settings.euclidean_time > 0 else 0.0
    if settings.quantity == "propagator":
        if settings.field == "scalar":
            raise ValidationError("The scalar field has no first-order propagator; use quantity 'delta'")
        spin = -1 if settings.spin == "down" else 1
        results = [causal_propagator(p, p_prime, cfg, run.extension, run.contour, anticausal, shift,
                                     threads=threads, spin=spin) for anticausal in (False, True)]
        return results[0].value, results[1].value, max(r.error for r in results)
    rc = reduce(p, p_prime, cfg, time_shift=shift)
    if settings.field == "scalar":
        D, extra = (3, (rc.dx3,)) if cfg.dim is Dimension.D3PLUS1 else (2, ())
        results = [integrate_scalar(rc, cfg, run.contour, anticausal, D, extra, threads)
                   for anticausal in (False, True)]
    else:
        results = [integrate(rc, cfg, run.extension, contour=run.contour, threads=threads)
                   for integrate in (integrate_causal, integrate_anticausal)]
    return results[0].value, results[1].value, max(r.error for r in results)


def cmd_propagate(run: RunConfig, threads: int = 1) -> Table:
    """
    Delta (or S) of every requested kind per point pair, with the quadrature
    error estimate. Step-function kinds at dx0 = 0 are emitted as NaN rows
    flagged 'undefined'.
    """
    settings = run.propagate

    def rows_for(cfg: FieldConfiguration) -> List[Dict[str, Any]]:
        rows = []
        for pair, (p, p_prime) in enumerate(run.points):
            causal, anticausal, error = _delta_pair(run, cfg, p, p_prime, threads)
            dx0 = p.x0 - p_prime.x0
            for kind in settings.kinds:
                base = {"pair": pair, "kind": kind.value, "error": error}
                try:
                    value, flag = assemble(kind, causal, anticausal, dx0), ""
                except SupportError:
                    value, flag = np.full_like(np.atleast_2d(causal), complex(np.nan, np.nan)), "undefined"
                rows.extend({**row, "flag": flag} for row in _matrix_rows(value, base))
        return rows

    # contour quadratures already use the pool; sweep variants run sequentially
    return _sweep_table(run, PROPAGATE_COLUMNS, rows_for, 1)


def cmd_nonrel(run: RunConfig, threads: int = 1) -> Table:
    """Retarded nonrelativistic Green function and its l = 0 part, plus an optional radial scan of x."""
    settings = run.nonrel

    def row(pair: int, scan: int, p: SpacetimePoint, p_prime: SpacetimePoint, cfg: FieldConfiguration):
        rc = reduce(p, p_prime, cfg)
        value = nonrel_retarded(settings.kind, rc, cfg, settings.tau, run.extension, settings.l_window)
        s0 = nonrel_critical(settings.kind, rc, cfg, settings.tau, run.extension)
        tau = complex(settings.tau)
        return {"pair": pair, "scan": scan, "r": p.r, "phi": p.phi, "tau_re": tau.real, "tau_im": tau.imag,
                **split_complex("value", value), **split_complex("s0", s0), "abs_s0": abs(s0)}

    def rows_for(cfg: FieldConfiguration) -> List[Dict[str, Any]]:
        rows = []
        for pair, (p, p_prime) in enumerate(run.points):
            rows.append(row(pair, 0, p, p_prime, cfg))
            for r in settings.radial_scan:
                rows.append(row(pair, 1, SpacetimePoint(p.x0, r, p.phi, p.x3), p_prime, cfg))
        return rows

    return _sweep_table(run, NONREL_COLUMNS, rows_for, threads)


def cmd_verify(run: RunConfig, only: Optional[Sequence[str]] = None, threads: int = 1) -> Dict[str, Any]:
    """
    Run the check registry and build the report.

    Returns:
        Report with every check result and the overall pass flag
    """
    check_ids = only if only else run.verify.only
    results: List[CheckResult] = run_suite(check_ids, run.verify.truncation, run.verify.tolerances, threads)
    failed = [result.check_id for result in results if not result.passed]
    return {
        "truncation": run.verify.truncation.to_dict(),
        "results": [result.to_dict() for result in results],
        "checks": len(results),
        "failed": len(failed),
        "failed_ids": sorted(set(failed)),
        "pass": not failed,
    }
