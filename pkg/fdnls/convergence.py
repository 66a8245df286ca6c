"""Continuum-limit experiments: h-sweeps of ||p_h S_h(t) d_h u_0 - S(t) u_0||, rate fits,
the sharpness construction and the compact-Fourier-support experiment."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import default_time_step, evolve_nonlinear, step_count
from .errors import DomainError, ReferenceValidationError
from .lattice import Field, Lattice, forward_values, lebesgue_norm_h, symbol_sigma_0, symbol_sigma_h
from .oracles import (
    build_continuum_datum,
    exact_solution,
    plane_wave_continuum,
    plane_wave_discrete,
    predicted_error_coefficients,
    sharpness_initial_datum,
    sharpness_spec,
)
from .pool import sweep_map
from .schema import CompactSpec, DatumSpec, ModelParams, PlaneWaveSpec, SobolevSpec, SolverConfig
from .transfer import (
    ContinuumField,
    continuum_distance,
    continuum_norm,
    discretize_dh,
    l2_torus_error,
    refine,
)

logger = logging.getLogger(__name__)

ZERO_ERROR = 1e-10
R2_MIN = 0.98
MONOTONE_SLACK = 1.10
REFERENCE_SHARE = 0.01
REFERENCE_DT = 1e-3
_ONLY_FINAL = 10**12


def fit_rate(h: Sequence[float], errors: Sequence[float]) -> Tuple[float, float, float]:
    """Least squares on (log h, log error): returns (rate, coefficient, r_squared)."""
    x = np.log(np.asarray(h, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(math.exp(intercept)), r2


@dataclass(frozen=True)
class ConvergenceRecord:
    M_values: np.ndarray
    h_values: np.ndarray
    errors: np.ndarray
    fitted_rate: float
    fitted_coefficient: float
    r_squared: float
    expected_rate: Optional[float] = None
    flags: Tuple[str, ...] = ()
    columns: Dict[str, np.ndarray] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return "degenerate" in self.flags

    @property
    def preasymptotic(self) -> bool:
        return "preasymptotic" in self.flags

    @property
    def monotone(self) -> bool:
        return "non-monotone" not in self.flags

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for i, M in enumerate(self.M_values):
            row = {"M": int(M), "h": float(self.h_values[i]), "error": float(self.errors[i])}
            for name, col in self.columns.items():
                row[name] = col[i].item() if hasattr(col[i], "item") else col[i]
            out.append(row)
        return out

    def summary(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "fitted_rate": self.fitted_rate,
            "fitted_coefficient": self.fitted_coefficient,
            "r_squared": self.r_squared,
            "expected_rate": self.expected_rate,
            "max_error": float(np.max(self.errors)),
            "min_error": float(np.min(self.errors)),
            "degenerate": self.degenerate,
            "preasymptotic": self.preasymptotic,
            "monotone": self.monotone,
            "flags": list(self.flags),
        }
        out.update(self.extras)
        return out


def build_record(
    M_values: Sequence[int],
    errors: Sequence[float],
    expected_rate: Optional[float] = None,
    columns: Optional[Dict[str, Sequence]] = None,
    extras: Optional[Dict[str, Any]] = None,
    label: str = "sweep",
) -> ConvergenceRecord:
    M_values = np.asarray(M_values, dtype=int)
    errors = np.asarray(errors, dtype=float)
    if len(M_values) < 3 or len(errors) != len(M_values):
        raise DomainError("a convergence record needs at least three (M, error) pairs")
    h = np.pi / M_values
    flags: List[str] = []
    rate = coef = r2 = float("nan")
    if np.max(errors) <= ZERO_ERROR or np.any(errors <= 0):
        flags.append("degenerate")
        logger.info("%s: degenerate: zero error (max %.3g), fit skipped", label, float(np.max(errors)))
    else:
        rate, coef, r2 = fit_rate(h, errors)
        if r2 < R2_MIN:
            flags.append("preasymptotic")
            logger.warning("%s: r^2=%.4f below %.2f, record flagged preasymptotic", label, r2, R2_MIN)
        logger.info("%s: fitted rate %.4f, coefficient %.4g, r^2 %.5f", label, rate, coef, r2)
    if np.any(errors[1:] > MONOTONE_SLACK * errors[:-1]) and "degenerate" not in flags:
        flags.append("non-monotone")
        logger.warning("%s: errors are not monotone in M: %s", label, np.array2string(errors, precision=3))
    cols = {k: np.asarray(v) for k, v in (columns or {}).items()}
    return ConvergenceRecord(M_values, h, errors, rate, coef, r2, expected_rate, tuple(flags), cols, dict(extras or {}))


def _check_sweep(M_list: Sequence[int]) -> List[int]:
    M_list = [int(m) for m in M_list]
    if len(M_list) < 3:
        raise DomainError("M_list needs at least three entries")
    if any(b <= a for a, b in zip(M_list, M_list[1:])) or M_list[0] < 1:
        raise DomainError(f"M_list must be strictly increasing positive integers, got {M_list}")
    return M_list


def _final_only(t_end: float, dt: float) -> SolverConfig:
    return SolverConfig(dt=min(dt, t_end) if t_end > 0 else None, t_end=t_end, record_stride=_ONLY_FINAL)


def expected_rate_for(datum: DatumSpec, params: ModelParams) -> Optional[float]:
    if isinstance(datum, PlaneWaveSpec) or isinstance(datum, CompactSpec):
        return 1.0
    if isinstance(datum, SobolevSpec):
        return min(1.0, 2.0 * datum.s / (2.0 + params.alpha))
    return None


def reference_solution(
    u0: ContinuumField, params: ModelParams, t: float, dt: float
) -> Tuple[ContinuumField, float]:
    """fNLS reference at time t plus its self-difference against dt/2 and a 2x finer grid."""
    cfg = _final_only(t, dt)
    ref = evolve_nonlinear(u0, params, cfg).final
    half = evolve_nonlinear(u0, params, _final_only(t, dt / 2.0)).final
    fine = evolve_nonlinear(refine(u0, 2), params, cfg).final
    diff = max(continuum_distance(ref, half), continuum_distance(ref, fine))
    logger.info("reference M_ref=%d dt=%.3g self-difference %.3g", u0.lattice.M, dt, diff)
    return ref, diff


def _lattice_final(
    u0: ContinuumField,
    coarse: Lattice,
    params: ModelParams,
    t: float,
    dt: Optional[float],
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
    records: int = 1,
) -> Field:
    g0 = discretize_dh(u0, coarse)
    step = dt if dt is not None else default_time_step(coarse, params)
    stride = max(1, step_count(t, step) // records) if records > 1 else _ONLY_FINAL
    cfg = SolverConfig(dt=min(step, t) if t > 0 else None, t_end=t, record_stride=stride)
    return evolve_nonlinear(g0, params, cfg, observer=observer).final


def _continuum_sweep(
    datum: DatumSpec,
    params: ModelParams,
    t_eval: float,
    M_list: Sequence[int],
    M_ref: Optional[int],
    dt: Optional[float],
    reference_dt: Optional[float],
    monitor_factory: Optional[Callable[[Lattice], Any]] = None,
    label: str = "continuum-limit",
):
    params.require_dispersive_range()
    M_list = _check_sweep(M_list)
    M_ref = M_ref or 8 * max(M_list)
    if M_ref < 8 * max(M_list):
        raise DomainError(f"M_ref={M_ref} must be at least 8*max(M_list)={8 * max(M_list)}")
    reference = Lattice(M_ref)
    u0 = build_continuum_datum(datum, reference, params)
    target = exact_solution(datum, params, t_eval, reference)
    self_diff = 0.0
    if target is None:
        ref_dt = reference_dt or (min(REFERENCE_DT, t_eval) if t_eval > 0 else REFERENCE_DT)
        target, self_diff = reference_solution(u0, params, t_eval, ref_dt)
    if dt is None and isinstance(datum, PlaneWaveSpec) and t_eval > 0:
        # single modes are propagated exactly by the splitting
        dt = t_eval / 4.0

    def cell(M: int):
        coarse = Lattice(M)
        monitor = monitor_factory(coarse) if monitor_factory else None
        final = _lattice_final(u0, coarse, params, t_eval, dt, monitor, records=50 if monitor else 1)
        err = l2_torus_error(final, target)
        logger.info("%s: M=%d error %.6g", label, M, err)
        return err, monitor

    results = sweep_map(cell, M_list)
    errors = [r[0] for r in results]
    monitors = [r[1] for r in results]
    positive = [e for e in errors if e > ZERO_ERROR]
    if self_diff > 0 and positive:
        threshold = REFERENCE_SHARE * min(positive)
        if self_diff > threshold:
            raise ReferenceValidationError(
                f"reference self-difference {self_diff:.3g} exceeds {REFERENCE_SHARE:.0%} of the "
                f"smallest measured error ({threshold:.3g}); refine the reference",
                self_diff,
                threshold,
            )
    extras = {
        "reference": "exact" if self_diff == 0 else "solver",
        "reference_self_difference": self_diff,
        "M_ref": M_ref,
        "t_eval": t_eval,
    }
    return M_list, errors, extras, monitors


def run_continuum_limit(
    datum: DatumSpec,
    params: ModelParams,
    t_eval: float,
    M_list: Sequence[int],
    M_ref: Optional[int] = None,
    dt: Optional[float] = None,
    reference_dt: Optional[float] = None,
) -> ConvergenceRecord:
    M_list, errors, extras, _ = _continuum_sweep(datum, params, t_eval, M_list, M_ref, dt, reference_dt)
    if isinstance(datum, PlaneWaveSpec):
        c_cont, _ = predicted_error_coefficients(datum, params, t_eval)
        extras["predicted_coefficient"] = c_cont
    return build_record(M_list, errors, expected_rate_for(datum, params), extras=extras, label="continuum-limit")


def run_discrete_rate(
    spec: PlaneWaveSpec, params: ModelParams, t: float, M_list: Sequence[int]
) -> ConvergenceRecord:
    """||u_h(t) - d_h u(t)||_{L2_h} for a plane wave; quadratic in h."""
    params.require_dispersive_range()
    M_list = _check_sweep(M_list)

    def cell(M: int) -> float:
        coarse = Lattice(M)
        g0 = plane_wave_discrete(spec, params, coarse, 0.0)
        cfg = _final_only(t, t / 8.0 if t > 0 else 1.0)
        u_h = evolve_nonlinear(g0, params, cfg).final
        exact = discretize_dh(plane_wave_continuum(spec, params, t, Lattice(8 * M)), coarse).physical()
        err = lebesgue_norm_h(u_h.with_values(u_h.values - exact.values), 2.0)
        logger.info("discrete-rate: M=%d error %.6g", M, err)
        return err

    errors = sweep_map(cell, M_list)
    _, c_disc = predicted_error_coefficients(spec, params, t)
    return build_record(
        M_list, errors, 2.0, extras={"predicted_coefficient": c_disc, "t_eval": t}, label="discrete-rate"
    )


def run_sharpness_experiment(
    params: ModelParams, T: float, eps: float, M_list: Sequence[int], n_times: int = 32
) -> ConvergenceRecord:
    """Sup-in-time error for the h-dependent single-mode datum at k_0 ~ T^{-1/(2+a)} h^{-2/(2+a)}.

    Besides the full error the record carries the dispersion-mismatch component
    sup_t (2pi)^{-1/2} ||(e^{-it sigma_h} - e^{-it|k|^a}) u_0^||, which isolates the
    lower-bound mechanism from the d_h/p_h interpolation term.
    """
    params.require_dispersive_range()
    M_list = _check_sweep(M_list)
    a = params.alpha

    def cell(M: int):
        coarse = Lattice(M)
        reference = Lattice(8 * M)
        spec = sharpness_spec(coarse, params, T, eps)
        u0 = sharpness_initial_datum(coarse, params, T, eps, reference)
        traj = evolve_nonlinear(
            discretize_dh(u0, coarse), params, SolverConfig(dt=T / n_times, t_end=T)
        )
        err = max(
            l2_torus_error(traj.field(i), plane_wave_continuum(spec, params, float(t), reference))
            for i, t in enumerate(traj.times)
        )
        k0 = spec.n
        times = traj.times
        gap = np.abs(
            np.exp(-1j * times * symbol_sigma_h(coarse, a, k0)) - np.exp(-1j * times * symbol_sigma_0(a, k0))
        )
        mismatch = float(math.sqrt(2.0 * math.pi) * abs(spec.mode_amplitude) * np.max(gap))
        norm = continuum_norm(u0, a / 2.0)
        logger.info("sharpness: M=%d k0=%d error %.6g mismatch %.6g", M, k0, err, mismatch)
        return err, k0, mismatch, norm

    results = sweep_map(cell, M_list)
    errors = [r[0] for r in results]
    k0s = np.array([r[1] for r in results])
    mismatch = np.array([r[2] for r in results])
    norms = np.array([r[3] for r in results])
    expected = a / (2.0 + a)
    competing = 2.0 / (2.0 + a)
    h = np.pi / np.asarray(M_list, dtype=float)
    if np.all(mismatch > 0):
        m_rate, m_coef, m_r2 = fit_rate(h, mismatch)
    else:
        m_rate = m_coef = m_r2 = float("nan")
    record = build_record(
        M_list,
        errors,
        expected,
        columns={"k0": k0s, "mismatch": mismatch, "datum_norm": norms},
        label="sharpness",
        extras={
            "T": T,
            "eps": eps,
            "competing_rate": competing,
            "mismatch_rate": m_rate,
            "mismatch_coefficient": m_coef,
            "mismatch_r_squared": m_r2,
            "datum_norm_target": eps * math.sqrt(2.0 * math.pi),
            "datum_norm_spread": float(norms.max() / norms.min()),
        },
    )
    record.extras["distance_to_expected"] = abs(record.fitted_rate - expected)
    record.extras["distance_to_competing"] = abs(record.fitted_rate - competing)
    record.extras["mismatch_distance_to_expected"] = abs(m_rate - expected)
    record.extras["mismatch_distance_to_competing"] = abs(m_rate - competing)
    return record


class SupportMonitor:
    """Tracks how much of F_h(|u|^2 u) leaves [-k_c, k_c] on one lattice."""

    def __init__(self, lattice: Lattice, k_c: int):
        self.lattice = lattice
        self.k_c = k_c
        self.outside = np.abs(lattice.dual) > k_c
        self.max_leak = 0.0

    def __call__(self, t: float, u: np.ndarray) -> None:
        spec = np.abs(forward_values(np.abs(u) ** 2 * u, self.lattice.M)) ** 2
        total = float(np.sum(spec))
        if total > 0:
            self.max_leak = max(self.max_leak, math.sqrt(float(np.sum(spec[self.outside])) / total))


def run_compact_support_experiment(
    spec: CompactSpec,
    params: ModelParams,
    T: float,
    M_list: Sequence[int],
    M_ref: Optional[int] = None,
    dt: Optional[float] = None,
    reference_dt: Optional[float] = None,
    k_c: Optional[int] = None,
    leak_tol: float = 1e-8,
    k_max_list: Sequence[int] = (1, 2, 4, 8),
) -> ConvergenceRecord:
    """Linear-rate experiment for data with finite Fourier support, plus a k_max sweep."""
    k_max = spec.k_max
    if 3 * k_max >= min(M_list):
        raise DomainError(f"compact-support runs need 3*k_max < M, got k_max={k_max}, min(M)={min(M_list)}")
    k_c = k_c or 3 * k_max
    M_list, errors, extras, monitors = _continuum_sweep(
        spec, params, T, M_list, M_ref, dt, reference_dt,
        monitor_factory=lambda lat: SupportMonitor(lat, k_c),
        label="compact-support",
    )
    leak = max(m.max_leak for m in monitors)
    extras.update({"k_max": k_max, "k_c": k_c, "support_leak": leak})
    if leak > leak_tol:
        logger.warning("compact-support: |u|^2 u left [-%d, %d] by %.3g (tolerance %.1g)", k_c, k_c, leak, leak_tol)

    # coefficient growth in k_max for energy-normalized single modes
    M_min = min(M_list)
    ks = [k for k in k_max_list if 0 < k < M_min]
    table = []
    for k in ks:
        pw = PlaneWaveSpec(A=k ** (-params.alpha / 2.0), n=k)
        _, errs, _, _ = _continuum_sweep(pw, params, T, M_list, M_ref, None, None, label=f"k_max={k}")
        table.append({"k_max": k, "coefficient": float(errs[-1] / (np.pi / M_list[-1]))})
    if len(table) >= 2:
        slope, _ = np.polyfit(np.log([r["k_max"] for r in table]), np.log([r["coefficient"] for r in table]), 1)
        extras["kmax_exponent"] = float(slope)
    else:
        extras["kmax_exponent"] = float("nan")
    extras["expected_kmax_exponent"] = 1.0 - params.alpha / 2.0
    extras["kmax_table"] = table
    record = build_record(M_list, errors, 1.0, extras=extras, label="compact-support")
    if leak > leak_tol:
        record = ConvergenceRecord(
            record.M_values, record.h_values, record.errors, record.fitted_rate,
            record.fitted_coefficient, record.r_squared, record.expected_rate,
            record.flags + ("support-leak",), record.columns, record.extras,
        )
    return record
