from __future__ import annotations

import logging
import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .errors import AliasingError, DomainError, ResolutionError
from .lattice import (
    Field,
    Lattice,
    Representation,
    forward_values,
    inverse_values,
    symbol_sigma_0,
    symbol_sigma_h,
)
from .schema import CompactSpec, CWSpec, DatumSpec, ModelParams, PlaneWaveSpec, SobolevSpec
from .transfer import ContinuumField, cell_average_factor

logger = logging.getLogger(__name__)

EPS_MAX = 1.0 / math.sqrt(2.0)


def continuum_frequency(spec: PlaneWaveSpec, params: ModelParams) -> float:
    """|n|^alpha + mu |A|^2 |n|^{-2s}."""
    return abs(spec.n) ** params.alpha + params.mu * abs(spec.mode_amplitude) ** 2


def cell_factor(lattice: Lattice, n: int) -> complex:
    return complex(cell_average_factor(lattice.h, np.array([n]))[0])


def discrete_frequency(spec: PlaneWaveSpec, params: ModelParams, lattice: Lattice) -> float:
    """sigma_h(n) + mu |A|^2 |n|^{-2s} |beta|^2 with beta the cell-average factor."""
    beta = cell_factor(lattice, spec.n)
    return symbol_sigma_h(lattice, params.alpha, spec.n) + params.mu * abs(spec.mode_amplitude * beta) ** 2


def plane_wave_continuum(spec: PlaneWaveSpec, params: ModelParams, t: float, reference: Lattice) -> ContinuumField:
    a = spec.mode_amplitude * np.exp(-1j * t * continuum_frequency(spec, params))
    return ContinuumField.from_modes(reference, {spec.n: a})


def plane_wave_discrete(spec: PlaneWaveSpec, params: ModelParams, lattice: Lattice, t: float) -> Field:
    if abs(spec.n) >= lattice.M:
        raise AliasingError(f"plane-wave mode n={spec.n} is aliased on M={lattice.M} (need |n| < M)")
    beta = cell_factor(lattice, spec.n)
    amp = spec.mode_amplitude * beta * np.exp(-1j * t * discrete_frequency(spec, params, lattice))
    return Field.plane_wave(lattice, spec.n, amp)


def plane_wave_residual_continuum(spec: PlaneWaveSpec, params: ModelParams, t: float, reference: Lattice) -> float:
    """sup |i u_t - |D|^alpha u - mu |u|^2 u|, relative to sup |i u_t|.

    The time derivative is the analytic phase rate; the spatial operator and the
    nonlinearity are evaluated numerically on the reference grid.
    """
    u = plane_wave_continuum(spec, params, t, reference)
    v = u.samples()
    lin = inverse_values(u.coefficients * symbol_sigma_0(params.alpha, reference.dual), reference.M)
    iut = continuum_frequency(spec, params) * v
    res = iut - lin - params.mu * np.abs(v) ** 2 * v
    return float(np.max(np.abs(res)) / max(1.0, np.max(np.abs(iut))))


def plane_wave_residual_discrete(spec: PlaneWaveSpec, params: ModelParams, lattice: Lattice, t: float) -> float:
    u = plane_wave_discrete(spec, params, lattice, t).values
    lin = inverse_values(forward_values(u, lattice.M) * symbol_sigma_h(lattice, params.alpha, lattice.dual), lattice.M)
    iut = discrete_frequency(spec, params, lattice) * u
    res = iut - lin - params.mu * np.abs(u) ** 2 * u
    return float(np.max(np.abs(res)) / max(1.0, np.max(np.abs(iut))))


def predicted_error_coefficients(spec: PlaneWaveSpec, params: ModelParams, t: float) -> Tuple[float, float]:
    """Leading coefficients of the L2(T) error (times h) and the L2_h error (times h^2)."""
    A = abs(spec.amplitude)
    n = abs(spec.n)
    s = spec.s
    c_cont = math.sqrt(math.pi / 2.0) * A * n ** (1.0 - s)
    c_disc = (
        math.sqrt(2.0 * math.pi) / 24.0
        * A * abs(t) * n ** (2.0 - 3.0 * s)
        * abs(params.alpha * n ** (params.alpha + 2.0 * s) + 2.0 * params.mu * A**2)
    )
    return c_cont, c_disc


def cw_solution(lattice: Lattice, A: float, mu: int, t: float) -> Field:
    return Field(lattice, np.full(lattice.size, A * np.exp(-1j * mu * A**2 * t)), Representation.PHYSICAL)


def cw_field(lattice: Lattice, cw: CWSpec) -> Field:
    """A + eps sum_k phase_k e^{ikx} on the lattice; k = M evaluates as its alias -M."""
    x = lattice.sites
    v = np.full(lattice.size, cw.A, dtype=np.complex128)
    for sb in cw.modes:
        if abs(sb.k) > lattice.M:
            raise DomainError(f"perturbation mode k={sb.k} outside the dual range of M={lattice.M}")
        v = v + cw.eps * np.exp(1j * sb.phase) * np.exp(1j * sb.k * x)
    return Field(lattice, v, Representation.PHYSICAL)


def cw_continuum(reference: Lattice, cw: CWSpec) -> ContinuumField:
    modes: Dict[int, complex] = {0: complex(cw.A)}
    for sb in cw.modes:
        modes[sb.k] = modes.get(sb.k, 0j) + cw.eps * np.exp(1j * sb.phase)
    return ContinuumField.from_modes(reference, modes)


def sharpness_mode(lattice: Lattice, params: ModelParams, T: float) -> int:
    """k_0 = T^{-1/(2+alpha)} h^{-2/(2+alpha)}, nearest integer with ties upward."""
    a = params.alpha
    k0 = T ** (-1.0 / (2.0 + a)) * lattice.h ** (-2.0 / (2.0 + a))
    return int(math.floor(k0 + 0.5))


def sharpness_spec(lattice: Lattice, params: ModelParams, T: float, eps: float) -> PlaneWaveSpec:
    if not 0.0 < eps < EPS_MAX:
        raise DomainError(f"sharpness eps must lie in (0, 1/sqrt(2)), got {eps!r}")
    if not 0.0 < T <= 1.0:
        raise DomainError(f"sharpness horizon T must lie in (0, 1], got {T!r}")
    k0 = sharpness_mode(lattice, params, T)
    return PlaneWaveSpec(A=eps * k0 ** (-params.alpha / 2.0), n=k0, s=0.0)


def sharpness_initial_datum(
    lattice: Lattice, params: ModelParams, T: float, eps: float, reference: Optional[Lattice] = None
) -> ContinuumField:
    """Single-mode datum eps k_0^{-alpha/2} e^{i k_0 x}, O(1) in H^{alpha/2} uniformly in h."""
    reference = reference or Lattice(8 * lattice.M)
    spec = sharpness_spec(lattice, params, T, eps)
    if spec.n > reference.M // 2 - 1:
        raise ResolutionError(
            f"k_0={spec.n} is not resolved by the reference grid M_ref={reference.M}"
        )
    return ContinuumField.from_modes(reference, {spec.n: spec.mode_amplitude})


def sobolev_datum(reference: Lattice, spec: SobolevSpec) -> ContinuumField:
    """Seeded generic H^s datum: a_k = scale <k>^{-s-1/2-decay_eps} e^{i theta_k}."""
    band = reference.M // 2 - 1
    k_cut = band if spec.k_cut is None else spec.k_cut
    if k_cut > band:
        raise ResolutionError(f"k_cut={k_cut} exceeds the reference bandlimit {band}")
    rng = np.random.Generator(np.random.Philox(spec.seed))
    ks = np.arange(-k_cut, k_cut + 1)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=ks.size)
    amp = spec.scale * (1.0 + ks.astype(float) ** 2) ** (-(spec.s + 0.5 + spec.decay_eps) / 2.0)
    return ContinuumField.from_modes(reference, dict(zip(ks.tolist(), amp * np.exp(1j * theta))))


def compact_datum(reference: Lattice, spec: CompactSpec) -> ContinuumField:
    modes: Dict[int, complex] = {}
    for m in spec.modes:
        modes[m.k] = modes.get(m.k, 0j) + m.amplitude * np.exp(1j * m.phase)
    return ContinuumField.from_modes(reference, modes)


def build_continuum_datum(spec: DatumSpec, reference: Lattice, params: ModelParams) -> ContinuumField:
    if isinstance(spec, PlaneWaveSpec):
        return plane_wave_continuum(spec, params, 0.0, reference)
    if isinstance(spec, CWSpec):
        return cw_continuum(reference, spec)
    if isinstance(spec, SobolevSpec):
        return sobolev_datum(reference, spec)
    return compact_datum(reference, spec)


def exact_solution(
    spec: DatumSpec, params: ModelParams, t: float, reference: Lattice
) -> Union[ContinuumField, None]:
    """Closed-form S(t)u_0 where one is known: plane waves and unperturbed CW data."""
    if isinstance(spec, PlaneWaveSpec):
        return plane_wave_continuum(spec, params, t, reference)
    if isinstance(spec, CWSpec) and (spec.eps == 0 or not spec.modes):
        return ContinuumField.from_modes(reference, {0: spec.A * np.exp(-1j * params.mu * spec.A**2 * t)})
    return None
