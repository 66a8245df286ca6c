"""Modulational instability of CW solutions: linear theory on the lattice and its measurement.

Linearizing u = (A + eps v) e^{-i mu A^2 t} gives Omega^2(k) = sigma_h(k) (sigma_h(k) + 2 mu A^2).
Modes with Omega^2 < 0 grow like exp(G t), G = sqrt(-Omega^2).
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from .dynamics import Trajectory, evolve_nonlinear
from .errors import DomainError
from .lattice import Lattice, forward_values, symbol_sigma_h
from .oracles import cw_field
from .pool import sweep_map
from .schema import CWSpec, ModelParams, Sideband, SolverConfig

logger = logging.getLogger(__name__)

WINDOW_LOW = 10.0
WINDOW_HIGH = 0.01
LOCALIZATION_FACTOR = 2.0
RECURRENCE_PROMINENCE = 0.5
TROUGH_DEPTH = 0.1


class Regime(str, enum.Enum):
    LATTICE_SATURATED = "LatticeSaturated"
    INTERIOR = "Interior"


@dataclass(frozen=True)
class MIReport:
    lattice: Lattice
    params: ModelParams
    A: float
    k: np.ndarray
    omega_sq: np.ndarray
    unstable_set: Tuple[int, ...]
    gain: np.ndarray
    omega_max: float
    k_max: int
    xi_m: float
    regime: Regime
    omega_max_continuous: float

    def gain_at(self, k: int) -> float:
        return float(self.gain[self.lattice.index_of(k)])

    def omega_sq_at(self, k: int) -> float:
        return float(self.omega_sq[self.lattice.index_of(k)])


def omega_squared(lattice: Lattice, params: ModelParams, A: float, k) -> np.ndarray:
    sig = symbol_sigma_h(lattice, params.alpha, k)
    return sig * (sig + 2.0 * params.mu * A**2)


def max_gain_formula(h: float, alpha: float, A: float) -> float:
    """Largest growth rate over real frequencies for mu = -1, both branches."""
    B = (2.0 / h) ** alpha
    if B >= A**2:
        return A**2
    return math.sqrt((2.0 * A**2 - B) * B)


def mi_dispersion(lattice: Lattice, params: ModelParams, A: float) -> MIReport:
    if not A > 0:
        raise DomainError(f"CW amplitude must be positive, got {A!r}")
    k = lattice.dual
    w2 = omega_squared(lattice, params, A, k)
    unstable = w2 < 0
    gain = np.where(unstable, np.sqrt(np.where(unstable, -w2, 0.0)), 0.0)
    h = lattice.h
    B = (2.0 / h) ** params.alpha
    regime = Regime.LATTICE_SATURATED if B <= A**2 else Regime.INTERIOR
    xi_m = (2.0 / h) * math.asin(min(1.0, h * A ** (2.0 / params.alpha) / 2.0))

    def g(kk: int) -> float:
        return float(gain[lattice.index_of(kk)])

    if not params.focusing:
        k_max, omega_max, cont = 0, 0.0, 0.0
    elif regime is Regime.LATTICE_SATURATED:
        k_max = lattice.M
        omega_max = g(k_max)
        cont = max_gain_formula(h, params.alpha, A)
    else:
        lo, hi = math.floor(xi_m), math.ceil(xi_m)
        candidates = sorted({c for c in (lo, hi) if 0 <= c <= lattice.M})
        # ties go to the smaller |k|
        k_max = max(candidates, key=lambda c: (g(c), -c))
        omega_max = g(k_max)
        cont = max_gain_formula(h, params.alpha, A)
    logger.debug("MI M=%d A=%g regime=%s k_max=%d omega_max=%.6g", lattice.M, A, regime.value, k_max, omega_max)
    return MIReport(
        lattice, params, float(A), k, w2, tuple(int(x) for x in k[unstable]), gain,
        float(omega_max), int(k_max), float(xi_m), regime, float(cont),
    )


def region_condition(lattice: Lattice, alpha: float, mu: int, A: float) -> np.ndarray:
    """Direct pointwise instability region: 0 < sigma_h(k) < 2A^2 for mu = -1, empty otherwise."""
    sig = symbol_sigma_h(lattice, alpha, lattice.dual)
    if mu == 1:
        return np.zeros(lattice.size, dtype=bool)
    return (sig > 0) & (sig < 2.0 * A**2)


def instability_mask(h: float, xi: np.ndarray, A, alpha, mu: int) -> np.ndarray:
    """Boolean Omega^2(xi) < 0 on a grid of real frequencies; A and alpha broadcast against xi."""
    xi = np.asarray(xi, dtype=float)
    sig = np.abs((2.0 / h) * np.sin(h * xi / 2.0)) ** np.asarray(alpha, dtype=float)
    return sig * (sig + 2.0 * mu * np.asarray(A, dtype=float) ** 2) < 0


def continuum_unstable_set(A: float, alpha: float, k_bound: int) -> Tuple[int, ...]:
    """{k != 0 : |k|^alpha < 2A^2} within |k| <= k_bound."""
    k = np.arange(-k_bound, k_bound + 1)
    keep = (k != 0) & (np.abs(k).astype(float) ** alpha < 2.0 * A**2)
    return tuple(int(x) for x in k[keep])


def mode_amplitudes(lattice: Lattice, snapshots: np.ndarray, ks: Sequence[int]) -> np.ndarray:
    """|F_h u(t, k)| / 2pi, one column per k; an eps e^{ikx} perturbation starts at eps."""
    F = forward_values(np.atleast_2d(snapshots), lattice.M)
    return np.abs(F[:, lattice.index_of(np.asarray(ks))]) / (2.0 * np.pi)


@dataclass(frozen=True)
class GrowthMeasurement:
    k: int
    gain_theory: float
    slope: float
    status: str
    window: Tuple[float, float] = (float("nan"), float("nan"))
    n_points: int = 0

    @property
    def relative_error(self) -> float:
        if self.status != "measured" or self.gain_theory == 0:
            return float("nan")
        return abs(self.slope - self.gain_theory) / self.gain_theory


@dataclass(frozen=True)
class SidebandGrowth:
    measurements: Dict[int, GrowthMeasurement]
    trajectory: Trajectory
    amplitudes: np.ndarray
    k_track: Tuple[int, ...] = field(default_factory=tuple)


def fit_growth(times: np.ndarray, amp: np.ndarray, eps: float, A: float) -> Tuple[str, float, Tuple[float, float], int]:
    lo, hi = WINDOW_LOW * eps, WINDOW_HIGH * A
    above = np.flatnonzero(amp >= lo)
    if above.size == 0 or eps == 0:
        return "stable", float("nan"), (float("nan"), float("nan")), 0
    start = int(above[0])
    past = np.flatnonzero(amp[start:] > hi)
    stop = start + int(past[0]) if past.size else len(amp)
    if stop - start < 3:
        return "under-resolved", float("nan"), (float(times[start]), float(times[min(stop, len(amp) - 1)])), stop - start
    t = times[start:stop]
    slope, _ = np.polyfit(t, np.log(amp[start:stop]), 1)
    return "measured", float(slope), (float(t[0]), float(t[-1])), stop - start


def measure_sideband_growth(
    cw: CWSpec, params: ModelParams, cfg: SolverConfig, k_track: Sequence[int], lattice: Lattice
) -> SidebandGrowth:
    """Evolve A + eps sum e^{ikx} and fit log|F_h u(t,k)| over the linear-growth window [10 eps, 0.01 A]."""
    for k in k_track:
        if abs(k) > lattice.M:
            raise DomainError(f"tracked mode k={k} outside the dual range of M={lattice.M}")
    traj = evolve_nonlinear(cw_field(lattice, cw), params, cfg)
    report = mi_dispersion(lattice, params, cw.A)
    amps = mode_amplitudes(lattice, traj.snapshots, k_track)
    out: Dict[int, GrowthMeasurement] = {}
    for j, k in enumerate(k_track):
        status, slope, window, n = fit_growth(traj.times, amps[:, j], cw.eps, cw.A)
        out[int(k)] = GrowthMeasurement(int(k), report.gain_at(k), slope, status, window, n)
        logger.info("sideband k=%d: %s slope=%.5g theory=%.5g", k, status, slope, report.gain_at(k))
    return SidebandGrowth(out, traj, amps, tuple(int(k) for k in k_track))


@dataclass(frozen=True)
class RecurrenceReport:
    first_localization_time: float
    recurrence_times: np.ndarray
    irregularity_index: float
    peak_values: np.ndarray

    @property
    def localized(self) -> bool:
        return not math.isnan(self.first_localization_time)


def recurrence_diagnostic(
    trajectory: Trajectory,
    A: float,
    factor: float = LOCALIZATION_FACTOR,
    prominence: float = RECURRENCE_PROMINENCE,
) -> RecurrenceReport:
    """First time ||u||_inf / A exceeds ``factor``, later peaks above it, and the
    coefficient of variation of the intervals between those peaks.

    A peak counts only when it stands ``prominence`` (in units of A) above the
    surrounding troughs, so ripples riding on one localization are a single event.
    """
    sup = trajectory.sup_norms() / A
    t = trajectory.times
    over = np.flatnonzero(sup > factor)
    if over.size == 0:
        return RecurrenceReport(float("nan"), np.array([]), float("nan"), np.array([]))
    first = float(t[over[0]])
    peaks, _ = find_peaks(sup, height=factor, prominence=prominence)
    times = t[peaks]
    gaps = np.diff(times)
    irregularity = float(np.std(gaps) / np.mean(gaps)) if gaps.size >= 2 else float("nan")
    return RecurrenceReport(first, np.asarray(times), irregularity, sup[peaks] * A)


@dataclass(frozen=True)
class RecurrenceRow:
    alpha: float
    first_localization_time: float
    recurrence_count: int
    irregularity_index: float
    max_sup_ratio: float
    relative_mass_drift: float

    def as_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def recurrence_sweep(
    cw: CWSpec,
    alpha_list: Sequence[float],
    mu: int,
    cfg: SolverConfig,
    lattice: Lattice,
    factor: float = LOCALIZATION_FACTOR,
    prominence: float = RECURRENCE_PROMINENCE,
) -> List[RecurrenceRow]:
    """Evolve the same perturbed CW for every alpha and diagnose localization and recurrence."""

    def row(alpha: float) -> RecurrenceRow:
        params = ModelParams(alpha=alpha, mu=mu)
        traj = evolve_nonlinear(cw_field(lattice, cw), params, cfg)
        rec = recurrence_diagnostic(traj, cw.A, factor, prominence)
        logger.info(
            "alpha=%g: first localization %.4g, %d recurrences, irregularity %.3g",
            alpha, rec.first_localization_time, rec.recurrence_times.size, rec.irregularity_index,
        )
        return RecurrenceRow(
            float(alpha),
            rec.first_localization_time,
            int(rec.recurrence_times.size),
            rec.irregularity_index,
            float(np.max(traj.sup_norms()) / cw.A),
            traj.log.relative_mass_drift,
        )

    return sweep_map(row, list(alpha_list))


def spatial_troughs(values: np.ndarray, depth: float = TROUGH_DEPTH) -> int:
    """Number of dips of |u|^2 along the periodic lattice at least ``depth`` times its mean deep."""
    p = np.abs(np.asarray(values)) ** 2
    mean = float(np.mean(p))
    if mean == 0.0:
        return 0
    # start and end on the global maximum so no dip straddles the seam
    p = np.roll(p, -int(np.argmax(p)))
    dips, _ = find_peaks(-np.append(p, p[0]), prominence=depth * mean)
    return int(dips.size)


def trough_onset(trajectory: Trajectory, depth: float = TROUGH_DEPTH) -> Tuple[int, float]:
    """(count, time) at the first record with a dip ``depth`` deep; (0, nan) if none has one.

    The count at that record uses half the depth, so sibling dips of one pattern that
    sit just under the threshold on the sampled lattice are still counted.
    """
    for t, snap in zip(trajectory.times, trajectory.snapshots):
        if spatial_troughs(snap, depth):
            return spatial_troughs(snap, 0.5 * depth), float(t)
    return 0, float("nan")


@dataclass(frozen=True)
class GainRow:
    A: float
    regime: str
    k_m: int
    omega_m_theory: float
    omega_m_continuous: float
    slope_measured: float
    status: str
    troughs: int = 0
    trough_time: float = float("nan")

    def as_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def sweep_max_gain(
    params: ModelParams,
    A_list: Sequence[float],
    lattice: Lattice,
    eps: float = 1e-5,
    cfg: Optional[SolverConfig] = None,
    mode: Optional[int] = None,
    measure: bool = True,
    trough_depth: float = TROUGH_DEPTH,
) -> List[GainRow]:
    """Theory and (optionally) measured growth at k_m, or at a fixed ``mode`` wrapped into the dual range.

    Measured rows also report the first spatial trough pattern of |u|^2 and when it appears.
    """
    if any(a <= 0 for a in A_list) or any(b <= a for a, b in zip(A_list, A_list[1:])):
        raise DomainError("A_list must be positive and ascending")

    def row(A: float) -> GainRow:
        rep = mi_dispersion(lattice, params, A)
        k = int(lattice.wrap(mode)) if mode is not None else rep.k_max
        theory = rep.gain_at(k) if mode is not None else rep.omega_max
        slope, status = float("nan"), "not-measured"
        troughs, trough_time = 0, float("nan")
        if measure and cfg is not None and k != 0:
            cw = CWSpec(A=A, eps=eps, modes=[Sideband(k=k)])
            growth = measure_sideband_growth(cw, params, cfg, [k], lattice)
            m = growth.measurements[k]
            slope, status = m.slope, m.status
            troughs, trough_time = trough_onset(growth.trajectory, trough_depth)
        return GainRow(
            float(A), rep.regime.value, k, theory, rep.omega_max_continuous, slope, status,
            troughs, trough_time,
        )

    return sweep_map(row, list(A_list))
