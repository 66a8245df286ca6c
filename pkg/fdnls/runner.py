"""Experiment orchestration: one runner per experiment, artifacts, verdict and manifest."""
from __future__ import annotations

import logging
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pydantic
import scipy

from . import __version__
from .convergence import (
    ConvergenceRecord,
    run_compact_support_experiment,
    run_continuum_limit,
    run_discrete_rate,
    run_sharpness_experiment,
)
from .dispersive import blowup_wavepacket_demo, dispersive_bound_check, strichartz_smoke_check, wavepacket_time_sweep
from .dynamics import Trajectory, evolve_nonlinear
from .engine import evaluate, exit_code
from .errors import DomainError, FdnlsError
from .io import sha256_file, write_csv, write_json, write_ndjson
from .lattice import Field, Lattice
from .messages import t as msg
from .mi import (
    instability_mask,
    max_gain_formula,
    measure_sideband_growth,
    omega_squared,
    recurrence_diagnostic,
    recurrence_sweep,
    region_condition,
    sweep_max_gain,
)
from .oracles import (
    build_continuum_datum,
    cw_field,
    plane_wave_discrete,
    plane_wave_residual_continuum,
    plane_wave_residual_discrete,
    predicted_error_coefficients,
)
from .schema import CompactSpec, CWSpec, DatumSpec, ModelParams, PlaneWaveSpec, RunConfig, Sideband
from .transfer import discretize_dh

logger = logging.getLogger(__name__)

CRITICAL_A = 1.0 / math.sqrt(2.0)
CRITICAL_ALPHAS = (0.5, 1.0, 1.5, 2.0)
LARGE_A_FACTOR = 16.0
GAIN_GRID = 20001


@dataclass
class RunContext:
    cfg: RunConfig
    out: Path
    artifacts: List[Path] = field(default_factory=list)

    @property
    def provenance(self) -> Dict[str, Any]:
        return {"experiment": self.cfg.experiment, "seed": self.cfg.seed, "fdnls": __version__}

    def csv(self, name: str, rows, columns=None) -> None:
        self.artifacts.append(write_csv(self.out / name, rows, self.provenance, columns))

    def ndjson(self, name: str, trajectory: Trajectory) -> None:
        self.artifacts.append(write_ndjson(self.out / name, trajectory.times, trajectory.snapshots))

    def json(self, name: str, doc: Any) -> None:
        self.artifacts.append(write_json(self.out / name, doc))


@dataclass
class RunResult:
    status: str
    summary: Dict[str, Any]
    checks: List[Dict[str, Any]]
    artifacts: List[Path]
    out: Path

    @property
    def exit_code(self) -> int:
        return exit_code(self.status)


def default_datum(experiment: str) -> DatumSpec:
    if experiment in {"simulate", "mi-track"}:
        return CWSpec(A=1.0, eps=1e-6, modes=[Sideband(k=1)])
    if experiment == "mi-recurrence":
        return CWSpec(A=1.0, eps=1e-6, modes=[Sideband(k=1), Sideband(k=-1)])
    if experiment == "compact-support":
        return CompactSpec()
    return PlaneWaveSpec()


def lattice_datum(datum: DatumSpec, lattice: Lattice, params: ModelParams) -> Field:
    """Initial lattice state: exact plane wave or CW where defined, else d_h of the continuum datum."""
    if isinstance(datum, CWSpec):
        return cw_field(lattice, datum)
    if isinstance(datum, PlaneWaveSpec):
        return plane_wave_discrete(datum, params, lattice, 0.0).physical()
    u0 = build_continuum_datum(datum, Lattice(8 * lattice.M), params)
    return discretize_dh(u0, lattice).physical()


def _record_rows(ctx: RunContext, name: str, record: ConvergenceRecord) -> Dict[str, Any]:
    ctx.csv(name, record.rows())
    return record.summary()


def run_simulate(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    params = cfg.params
    datum = cfg.datum or default_datum("simulate")
    lattice = Lattice(cfg.M)
    u0 = lattice_datum(datum, lattice, params)
    traj = evolve_nonlinear(u0, params, cfg.solver)
    ctx.ndjson("trajectory.ndjson", traj)
    sup = traj.sup_norms()
    ctx.csv(
        "conservation.csv",
        [
            {"t": float(tt), "mass": float(m), "energy": float(e), "sup_norm": float(s)}
            for tt, m, e, s in zip(traj.times, traj.log.mass, traj.log.energy, sup)
        ],
    )
    summary: Dict[str, Any] = {
        "M": cfg.M,
        "mu": params.mu,
        "alpha": params.alpha,
        "datum_kind": datum.kind,
        "dt": traj.dt,
        "n_records": len(traj),
        "relative_mass_drift": traj.log.relative_mass_drift,
        "energy_drift": traj.log.energy_drift,
        "max_sup_norm": float(np.max(sup)),
        "check_dt_halving": cfg.check_dt_halving,
    }
    if cfg.check_dt_halving:
        half_cfg = cfg.solver.model_copy(update={"dt": traj.dt / 2.0, "record_stride": 2 * cfg.record_stride})
        half = evolve_nonlinear(u0, params, half_cfg)
        drift_half = half.log.energy_drift
        summary["energy_drift_half"] = drift_half
        summary["energy_drift_ratio"] = traj.log.energy_drift / drift_half if drift_half > 0 else float("nan")
    if isinstance(datum, CWSpec):
        rec = recurrence_diagnostic(traj, datum.A, cfg.mi.localization_factor, cfg.mi.peak_prominence)
        summary.update(
            first_localization_time=rec.first_localization_time,
            recurrence_count=int(rec.recurrence_times.size),
            irregularity_index=rec.irregularity_index,
        )
    return summary


def run_converge(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    datum = cfg.datum or default_datum("converge")
    if cfg.metric == "lattice":
        record = run_discrete_rate(datum, cfg.params, cfg.t_eval, cfg.M_list)
    else:
        record = run_continuum_limit(datum, cfg.params, cfg.t_eval, cfg.M_list, cfg.M_ref, cfg.dt)
    summary = _record_rows(ctx, "convergence.csv", record)
    summary.update(datum_kind=datum.kind, metric=cfg.metric, mu=cfg.mu, alpha=cfg.alpha)
    return summary


def run_sharpness(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    sp = cfg.sharpness
    record = run_sharpness_experiment(cfg.params, sp.T, sp.eps, cfg.M_list, sp.n_times)
    summary = _record_rows(ctx, "sharpness.csv", record)
    summary.update(mu=cfg.mu, alpha=cfg.alpha)
    return summary


def run_compact_support(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    datum = cfg.datum or default_datum("compact-support")
    if not isinstance(datum, CompactSpec):
        raise DomainError(f"compact-support needs a compact datum, got kind={datum.kind!r}")
    cs = cfg.compact
    record = run_compact_support_experiment(
        datum, cfg.params, cfg.t_eval, cfg.M_list, cfg.M_ref, cfg.dt,
        k_c=cs.k_c, leak_tol=cs.leak_tol, k_max_list=cs.k_max_list,
    )
    summary = _record_rows(ctx, "compact_support.csv", record)
    ctx.csv("kmax.csv", summary.pop("kmax_table"))
    summary.update(mu=cfg.mu, alpha=cfg.alpha)
    return summary


def _real_gain_max(h: float, alpha: float, A: float, mu: int = -1) -> float:
    # geometric half resolves the maximiser at small alpha, where |xi|^alpha = A^2 sits near 0
    top = math.pi / h
    xi = np.union1d(np.linspace(0.0, top, GAIN_GRID), np.geomspace(1e-12 * top, top, GAIN_GRID))
    sig = np.abs((2.0 / h) * np.sin(h * xi / 2.0)) ** alpha
    w2 = sig * (sig + 2.0 * mu * A**2)
    return float(np.sqrt(max(0.0, -float(np.min(w2)))))


def run_mi_region(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    ms = cfg.mi
    lattice = Lattice(cfg.M)
    h = lattice.h
    A_grid = np.linspace(ms.A_min, ms.A_max, ms.A_points)
    alpha_grid = np.linspace(ms.alpha_min, ms.alpha_max, ms.alpha_points)
    mismatches = 0
    for a in alpha_grid:
        params = ModelParams(alpha=float(a), mu=cfg.mu)
        for A in A_grid:
            computed = omega_squared(lattice, params, float(A), lattice.dual) < 0
            direct = region_condition(lattice, float(a), cfg.mu, float(A))
            mismatches += int(np.count_nonzero(computed != direct))
    sets = [
        tuple(lattice.dual[region_condition(lattice, a, cfg.mu, CRITICAL_A)].tolist()) for a in CRITICAL_ALPHAS
    ]
    invariant = all(s == sets[0] for s in sets)

    xi = np.linspace(-math.pi / h, math.pi / h, ms.xi_points)
    if ms.axis == "A":
        other, fixed = A_grid, {"alpha": cfg.alpha}
        mask = instability_mask(h, xi[None, :], other[:, None], cfg.alpha, cfg.mu)
    else:
        other, fixed = alpha_grid, {"A": ms.A_list[-1]}
        mask = instability_mask(h, xi[None, :], ms.A_list[-1], other[:, None], cfg.mu)
    rows = [
        {"xi": float(x), ms.axis: float(v), "unstable": bool(mask[i, j])}
        for i, v in enumerate(other)
        for j, x in enumerate(xi)
    ]
    ctx.csv("region.csv", rows, ["xi", ms.axis, "unstable"])
    logger.info("mi-region: %d mismatches over %d grid points", mismatches, A_grid.size * alpha_grid.size)
    return {
        "M": cfg.M,
        "mu": cfg.mu,
        "axis": ms.axis,
        **fixed,
        "mask_mismatches": mismatches,
        "critical_set_invariant": invariant,
        "critical_set": list(sets[0]),
        "unstable_fraction": float(np.mean(mask)),
    }


def run_mi_gain(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    ms = cfg.mi
    params = cfg.params
    lattice = Lattice(cfg.M)
    h = lattice.h
    B = (2.0 / h) ** params.alpha
    eps = cfg.datum.eps if isinstance(cfg.datum, CWSpec) and cfg.datum.eps > 0 else 1e-5
    rows = sweep_max_gain(params, ms.A_list, lattice, eps, cfg.solver, ms.mode, ms.measure, ms.trough_depth)
    table = []
    for r in rows:
        d = r.as_dict()
        d["omega_m_real_grid"] = _real_gain_max(h, params.alpha, r.A, params.mu)
        table.append(d)
    ctx.csv("gain.csv", table)

    small = [A for A in ms.A_list if A**2 < B]
    small_dev = max((abs(_real_gain_max(h, params.alpha, A) - A**2) / A**2 for A in small), default=float("nan"))
    A_c = math.sqrt(B)
    crossover_gap = abs(A_c**2 - math.sqrt((2.0 * A_c**2 - B) * B))
    A_large = math.sqrt(LARGE_A_FACTOR * B)
    large_ratio = _real_gain_max(h, params.alpha, A_large) / (math.sqrt(2.0) * A_large * B**0.5)
    measured = [r for r in rows if r.status == "measured" and r.omega_m_theory > 0]
    slope_err = max((abs(r.slope_measured - r.omega_m_theory) / r.omega_m_theory for r in measured), default=float("nan"))
    with_troughs = [r.A for r in rows if r.troughs > 0]
    return {
        "M": cfg.M,
        "mu": params.mu,
        "alpha": params.alpha,
        "crossover_A": A_c,
        "small_A_max_dev": small_dev,
        "crossover_gap": crossover_gap,
        "large_A_ratio": large_ratio,
        "large_A_ratio_formula": max_gain_formula(h, params.alpha, A_large) / (math.sqrt(2.0) * A_large * B**0.5),
        "n_measured": len(measured),
        "max_rel_slope_error": slope_err,
        "n_trough_rows": len(with_troughs),
        "first_trough_A": min(with_troughs, default=float("nan")),
    }


def run_mi_track(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    datum = cfg.datum or default_datum("mi-track")
    if not isinstance(datum, CWSpec):
        raise DomainError(f"mi-track needs a cw datum, got kind={datum.kind!r}")
    lattice = Lattice(cfg.M)
    ks = sorted({sb.k for sb in datum.modes}, key=lambda k: (abs(k), k)) or [1]
    growth = measure_sideband_growth(datum, cfg.params, cfg.solver, ks, lattice)
    traj = growth.trajectory
    ctx.csv("growth.csv", [
        {
            "k": m.k, "gain_theory": m.gain_theory, "slope": m.slope, "status": m.status,
            "window_start": m.window[0], "window_end": m.window[1], "n_points": m.n_points,
            "relative_error": m.relative_error,
        }
        for m in growth.measurements.values()
    ])
    sup = traj.sup_norms()
    amp_rows = []
    for i, tt in enumerate(traj.times):
        row = {"t": float(tt), "sup_norm": float(sup[i])}
        for j, k in enumerate(growth.k_track):
            row[f"amp_{k}"] = float(growth.amplitudes[i, j])
        amp_rows.append(row)
    ctx.csv("amplitudes.csv", amp_rows)
    rec = recurrence_diagnostic(traj, datum.A, cfg.mi.localization_factor, cfg.mi.peak_prominence)
    measured = [m for m in growth.measurements.values() if m.status == "measured"]
    errs = [m.relative_error for m in measured if not math.isnan(m.relative_error)]
    return {
        "M": cfg.M,
        "mu": cfg.mu,
        "alpha": cfg.alpha,
        "A": datum.A,
        "eps": datum.eps,
        "n_growing": len(measured),
        "max_rel_slope_error": max(errs) if errs else float("nan"),
        "relative_mass_drift": traj.log.relative_mass_drift,
        "first_localization_time": rec.first_localization_time,
        "recurrence_count": int(rec.recurrence_times.size),
        "irregularity_index": rec.irregularity_index,
    }


def run_mi_recurrence(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    ms = cfg.mi
    datum = cfg.datum or default_datum("mi-recurrence")
    if not isinstance(datum, CWSpec):
        raise DomainError(f"mi-recurrence needs a cw datum, got kind={datum.kind!r}")
    rows = recurrence_sweep(
        datum, ms.alpha_list, cfg.mu, cfg.solver, Lattice(cfg.M), ms.localization_factor, ms.peak_prominence
    )
    ctx.csv("recurrence.csv", [r.as_dict() for r in rows])
    by_alpha = sorted(rows, key=lambda r: r.alpha)
    low, high = by_alpha[0], by_alpha[-1]
    ordered = None
    if len(rows) >= 2 and not (math.isnan(low.irregularity_index) or math.isnan(high.irregularity_index)):
        ordered = low.irregularity_index > high.irregularity_index
    firsts = [r.first_localization_time for r in reversed(by_alpha)]
    delayed = None
    if len(rows) >= 2 and not any(math.isnan(f) for f in firsts):
        delayed = all(b >= a for a, b in zip(firsts, firsts[1:]))
    return {
        "M": cfg.M,
        "mu": cfg.mu,
        "A": datum.A,
        "eps": datum.eps,
        "alpha_list": [r.alpha for r in rows],
        "all_localized": all(not math.isnan(r.first_localization_time) for r in rows),
        "irregularity_ordered": ordered,
        "irregularity_low_alpha": low.irregularity_index,
        "irregularity_high_alpha": high.irregularity_index,
        "localization_delay_monotone": delayed,
        "first_localization_spread": max(firsts) - min(firsts),
        "max_relative_mass_drift": max(r.relative_mass_drift for r in rows),
    }


def run_kernel_probe(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    pr = cfg.probe
    summary: Dict[str, Any] = {"mu": cfg.mu, "sections": list(pr.sections)}
    if "bound" in pr.sections:
        res = dispersive_bound_check(pr.alpha_list, cfg.M_list, pr.N_list, pr.t_fractions, pr.t_values, cfg.mu)
        ctx.csv("kernel_bound.csv", res["rows"])
        ctx.csv("kernel_sup.csv", res["sup_ratios"])
        summary["bound_sup_variation"] = res["max_doubling_variation"]
        summary["bound_skipped"] = res["skipped"]
    if "wavepacket" in pr.sections:
        rows, sweep, devs = [], [], []
        for a in pr.wavepacket_alpha_list:
            params = ModelParams(alpha=a, mu=cfg.mu)
            res = blowup_wavepacket_demo(params, pr.T, pr.wavepacket_M_list, pr.p, pr.q, pr.safety)
            rows += [{"alpha": a, **r} for r in res["rows"]]
            devs.append(abs(res["slope"] - res["expected_slope"]))
            summary[f"wavepacket_slope_{a:g}"] = res["slope"]
            summary[f"wavepacket_expected_slope_{a:g}"] = res["expected_slope"]
            if res["admitted"]:
                sweep += [{"alpha": a, **r} for r in wavepacket_time_sweep(
                    params, max(res["admitted"]), pr.T_list, pr.p, pr.q, pr.safety)]
        ctx.csv("wavepacket.csv", rows)
        ctx.csv("wavepacket_time.csv", sweep)
        summary["wavepacket_max_slope_deviation"] = max(devs) if devs else float("nan")
    if "strichartz" in pr.sections:
        a = cfg.alpha if 1.0 < cfg.alpha <= 2.0 else pr.alpha_list[-1]
        res = strichartz_smoke_check(
            ModelParams(alpha=a, mu=cfg.mu), pr.strichartz_M_list, cfg.seed,
            pr.strichartz_times, tolerance=pr.strichartz_tolerance,
        )
        ctx.csv("strichartz.csv", res["rows"])
        summary["strichartz_constant"] = res["C"]
        summary["strichartz_pass"] = res["pass"]
    return summary


def run_oracle_check(ctx: RunContext) -> Dict[str, Any]:
    cfg = ctx.cfg
    params = cfg.params
    spec = cfg.datum if isinstance(cfg.datum, PlaneWaveSpec) else PlaneWaveSpec()
    rows = []
    for M in cfg.M_list:
        lattice = Lattice(M)
        rows.append({
            "M": M,
            "residual_discrete": plane_wave_residual_discrete(spec, params, lattice, cfg.t_eval),
            "residual_continuum": plane_wave_residual_continuum(spec, params, cfg.t_eval, Lattice(8 * M)),
        })
    ctx.csv("oracles.csv", rows)
    c_cont, c_disc = predicted_error_coefficients(spec, params, cfg.t_eval)
    summary: Dict[str, Any] = {
        "mu": params.mu,
        "alpha": params.alpha,
        "max_residual_discrete": max(r["residual_discrete"] for r in rows),
        "max_residual_continuum": max(r["residual_continuum"] for r in rows),
        "c_continuum": c_cont,
        "c_discrete": c_disc,
        "constant_case_error": float("nan"),
    }
    if params.dispersive_range and len(cfg.M_list) >= 3:
        record = run_continuum_limit(CWSpec(A=1.0), params, cfg.t_eval, cfg.M_list)
        summary["constant_case_error"] = float(np.max(record.errors))
        summary["constant_case_degenerate"] = record.degenerate
    return summary


RUNNERS: Dict[str, Callable[[RunContext], Dict[str, Any]]] = {
    "simulate": run_simulate,
    "converge": run_converge,
    "sharpness": run_sharpness,
    "compact-support": run_compact_support,
    "mi-region": run_mi_region,
    "mi-gain": run_mi_gain,
    "mi-track": run_mi_track,
    "mi-recurrence": run_mi_recurrence,
    "kernel-probe": run_kernel_probe,
    "oracle-check": run_oracle_check,
}


def _versions() -> Dict[str, str]:
    return {
        "fdnls": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def run_experiment(cfg: RunConfig, out: Optional[Path] = None, rules: Optional[Dict[str, Any]] = None) -> RunResult:
    """Run one experiment into ``out``; manifest.json is written even when the run raises."""
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg, out)
    stage = "run"
    status = "ERROR"
    summary: Dict[str, Any] = {}
    checks: List[Dict[str, Any]] = []
    error: Optional[Dict[str, Any]] = None
    start = time.perf_counter()
    logger.info("%s: %s", cfg.experiment, msg(f"experiments.{cfg.experiment}", default=cfg.experiment))
    try:
        summary = RUNNERS[cfg.experiment](ctx)
        stage = "verdict"
        verdict = evaluate(cfg.experiment, summary, rules)
        status, checks = verdict["status"], verdict["checks"]
        stage = "write"
        ctx.json("summary.json", {"experiment": cfg.experiment, "status": status, "summary": summary, "checks": checks})
        stage = "done"
        logger.info("%s finished: %s", cfg.experiment, status)
        return RunResult(status, summary, checks, list(ctx.artifacts), out)
    except FdnlsError as e:
        error = e.to_record()
        raise
    except Exception as e:
        error = {"type": type(e).__name__, "message": str(e)}
        raise
    finally:
        manifest = {
            "experiment": cfg.experiment,
            "config": cfg.model_dump(mode="json"),
            "versions": _versions(),
            "seed": cfg.seed,
            "generator": "numpy.random.Philox",
            "wall_time_s": time.perf_counter() - start,
            "status": status,
            "stage": stage,
            "error": error,
            "checks": checks,
            "artifacts": [
                {"path": str(p.relative_to(out)), "sha256": sha256_file(p)} for p in ctx.artifacts if p.exists()
            ],
        }
        write_json(out / "manifest.json", manifest)
