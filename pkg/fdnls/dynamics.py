"""Exact linear propagators, the Strang split-step integrator and conservation monitors.

The model is  i u_t = L u + mu |u|^2 u  with L the multiplier sigma_h(k) on the
lattice (fDNLS) or |k|^alpha on the reference grid (fNLS).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from .errors import BlowUpError
from .lattice import (
    Field,
    Lattice,
    Representation,
    forward_values,
    inverse_values,
    symbol_sigma_0,
    symbol_sigma_h,
)
from .schema import ModelParams, SolverConfig
from .transfer import ContinuumField

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e8

State = Union[Field, ContinuumField]


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConservationLog:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray

    def __post_init__(self) -> None:
        for name in ("times", "mass", "energy"):
            object.__setattr__(self, name, _ro(np.asarray(getattr(self, name), dtype=float)))

    @property
    def relative_mass_drift(self) -> float:
        m0 = self.mass[0]
        if m0 == 0:
            return float(np.max(np.abs(self.mass)))
        return float(np.max(np.abs(self.mass - m0)) / m0)

    @property
    def energy_drift(self) -> float:
        return float(abs(self.energy[-1] - self.energy[0]))


@dataclass(frozen=True)
class Trajectory:
    """Recorded physical snapshots, one row per record time."""

    lattice: Lattice
    times: np.ndarray
    snapshots: np.ndarray
    log: ConservationLog
    continuum: bool = False
    dt: float = float("nan")

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", _ro(np.asarray(self.times, dtype=float)))
        object.__setattr__(self, "snapshots", _ro(np.asarray(self.snapshots, dtype=np.complex128)))

    def __len__(self) -> int:
        return len(self.times)

    def field(self, i: int) -> State:
        if self.continuum:
            return ContinuumField.from_samples(self.lattice, self.snapshots[i])
        return Field(self.lattice, self.snapshots[i], Representation.PHYSICAL)

    @property
    def final(self) -> State:
        return self.field(len(self) - 1)

    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.snapshots), axis=1)

    def spectra(self) -> np.ndarray:
        """F_h of every snapshot, natural order."""
        return forward_values(self.snapshots, self.lattice.M)


def default_time_step(lattice: Lattice, params: ModelParams) -> float:
    """0.1 min(1, 1/sigma_h(M)): the fastest linear phase turns at most 0.1 rad per step."""
    top = symbol_sigma_h(lattice, params.alpha, lattice.M)
    return 0.1 * min(1.0, 1.0 / top)


def step_count(t_end: float, dt: float) -> int:
    if t_end <= 0:
        return 0
    return max(1, math.ceil(t_end / dt - 1e-9))


def linear_propagate_discrete(f: Field, t: float, params: ModelParams) -> Field:
    F = f.frequency()
    phase = np.exp(-1j * t * symbol_sigma_h(f.lattice, params.alpha, f.lattice.dual))
    out = Field(f.lattice, F.values * phase, Representation.FREQUENCY)
    return out.physical() if f.representation is Representation.PHYSICAL else out


def linear_propagate_continuum(u: ContinuumField, t: float, params: ModelParams) -> ContinuumField:
    phase = np.exp(-1j * t * symbol_sigma_0(params.alpha, u.lattice.dual))
    return u.with_coefficients(u.coefficients * phase)


def mass_h(f: Field) -> float:
    v = f.physical().values
    return float(f.lattice.h * np.sum(np.abs(v) ** 2))


def energy_h(f: Field, params: ModelParams) -> float:
    """H_h = 1/2 || |grad_h|^{alpha/2} u ||^2 + mu/4 ||u||_{L4_h}^4."""
    F = f.frequency().values
    sig = symbol_sigma_h(f.lattice, params.alpha, f.lattice.dual)
    kinetic = np.sum(sig * np.abs(F) ** 2) / (2.0 * np.pi)
    quartic = f.lattice.h * np.sum(np.abs(f.physical().values) ** 4)
    return float(0.5 * kinetic + 0.25 * params.mu * quartic)


def mass_continuum(u: ContinuumField) -> float:
    return float(np.sum(np.abs(u.coefficients) ** 2) / (2.0 * np.pi))


def energy_continuum(u: ContinuumField, params: ModelParams) -> float:
    # trapezoid is exact for |u|^4 at this bandlimit
    sig = symbol_sigma_0(params.alpha, u.lattice.dual)
    kinetic = np.sum(sig * np.abs(u.coefficients) ** 2) / (2.0 * np.pi)
    quartic = u.lattice.h * np.sum(np.abs(u.samples()) ** 4)
    return float(0.5 * kinetic + 0.25 * params.mu * quartic)


def _monitors(values: np.ndarray, lattice: Lattice, symbol: np.ndarray, mu: int):
    F = forward_values(values, lattice.M)
    mass = float(np.sum(np.abs(F) ** 2) / (2.0 * np.pi))
    kinetic = np.sum(symbol * np.abs(F) ** 2) / (2.0 * np.pi)
    quartic = lattice.h * np.sum(np.abs(values) ** 4)
    return mass, float(0.5 * kinetic + 0.25 * mu * quartic)


def evolve_nonlinear(
    u0: State,
    params: ModelParams,
    cfg: SolverConfig,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Trajectory:
    """Strang split-step: N(dt/2), exp(-i dt L), N(dt/2), with exact sub-flows.

    A ``ContinuumField`` start runs the fNLS reference solver, which keeps the
    state inside the bandlimit in every linear sub-step. ``observer`` is called
    on every recorded physical snapshot.
    """
    continuum = isinstance(u0, ContinuumField)
    lattice = u0.lattice
    if continuum:
        u = u0.samples()
        symbol = symbol_sigma_0(params.alpha, lattice.dual)
        band = np.abs(lattice.dual) <= u0.bandlimit
    else:
        u = np.array(u0.physical().values, copy=True)
        symbol = symbol_sigma_h(lattice, params.alpha, lattice.dual)
        band = None

    dt = cfg.dt if cfg.dt is not None else default_time_step(lattice, params)
    n_steps = step_count(cfg.t_end, dt)
    dt_eff = cfg.t_end / n_steps if n_steps else 0.0
    linear = np.exp(-1j * dt_eff * symbol)
    if band is not None:
        linear = np.where(band, linear, 0.0)
    half = 0.5 * dt_eff * params.mu
    M = lattice.M
    logger.debug(
        "evolve %s M=%d alpha=%g mu=%d dt=%.3g steps=%d",
        "fNLS" if continuum else "fDNLS", M, params.alpha, params.mu, dt_eff, n_steps,
    )

    times: List[float] = []
    snaps: List[np.ndarray] = []
    mass: List[float] = []
    energy: List[float] = []

    def record(step: int) -> None:
        t = step * dt_eff
        m, e = _monitors(u, lattice, symbol, params.mu)
        times.append(t)
        snaps.append(u.copy())
        mass.append(m)
        energy.append(e)
        if observer is not None:
            observer(t, u)

    record(0)
    for step in range(1, n_steps + 1):
        u *= np.exp(-1j * half * np.abs(u) ** 2)
        u = inverse_values(forward_values(u, M) * linear, M)
        u *= np.exp(-1j * half * np.abs(u) ** 2)
        sup = float(np.max(np.abs(u)))
        if not np.isfinite(sup) or sup > BLOWUP_THRESHOLD:
            raise BlowUpError(step * dt_eff, None if continuum else M, sup)
        if step % cfg.record_stride == 0 or step == n_steps:
            record(step)

    log = ConservationLog(np.array(times), np.array(mass), np.array(energy))
    return Trajectory(lattice, np.array(times), np.array(snaps), log, continuum, dt_eff)
