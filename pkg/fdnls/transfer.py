"""Cell-average discretization d_h, linear interpolation p_h, and the L2(T) error.

The torus is stood in for by a fine reference lattice (M_ref >= 8 M).  A
``ContinuumField`` stores the Fourier coefficients u^(k) = int u e^{-ikx} dx,
which for a bandlimited function coincide with the fine-lattice transform of
its samples.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np

from .errors import DomainError, ResolutionError
from .lattice import (
    Field,
    Lattice,
    Representation,
    TransformMethod,
    forward_values,
    inverse_values,
)

logger = logging.getLogger(__name__)

MIN_REFINEMENT = 8


@dataclass(frozen=True)
class ContinuumField:
    lattice: Lattice
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if c.shape != (self.lattice.size,):
            raise DomainError(
                f"continuum field on M_ref={self.lattice.M} needs {self.lattice.size} coefficients"
            )
        c[np.abs(self.lattice.dual) > self.bandlimit] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def bandlimit(self) -> int:
        return self.lattice.M // 2 - 1

    @classmethod
    def from_samples(cls, lattice: Lattice, samples: np.ndarray, method: TransformMethod = "auto") -> "ContinuumField":
        return cls(lattice, forward_values(np.asarray(samples, dtype=np.complex128), lattice.M, method))

    @classmethod
    def from_modes(cls, lattice: Lattice, modes: Mapping[int, complex]) -> "ContinuumField":
        """Build sum_k a_k e^{ikx} from amplitudes a_k."""
        c = np.zeros(lattice.size, dtype=np.complex128)
        band = lattice.M // 2 - 1
        for k, a in modes.items():
            if abs(k) > band:
                raise ResolutionError(
                    f"mode k={k} exceeds the reference bandlimit {band} (M_ref={lattice.M})"
                )
            c[k + lattice.M] += 2.0 * np.pi * a
        return cls(lattice, c)

    def samples(self, method: TransformMethod = "auto") -> np.ndarray:
        return inverse_values(self.coefficients, self.lattice.M, method)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.bandlimit:
            return 0j
        return complex(self.coefficients[k + self.lattice.M])

    def with_coefficients(self, coefficients: np.ndarray) -> "ContinuumField":
        return ContinuumField(self.lattice, coefficients)


def _check_divisible(fine: Lattice, coarse: Lattice) -> int:
    if fine.M % coarse.M != 0:
        raise DomainError(
            f"incompatible grids: M_ref={fine.M} is not a multiple of M={coarse.M}"
        )
    return fine.M // coarse.M


def _check_refinement(fine: Lattice, coarse: Lattice) -> None:
    if fine.M < MIN_REFINEMENT * coarse.M:
        raise DomainError(
            f"incompatible grids: reference M_ref={fine.M} must be at least "
            f"{MIN_REFINEMENT}*M={MIN_REFINEMENT * coarse.M}"
        )


def cell_average_factor(h: float, K: np.ndarray) -> np.ndarray:
    """(e^{ihK} - 1)/(ihK), continued by 1 at K = 0."""
    K = np.asarray(K, dtype=float)
    z = h * K
    out = np.ones_like(z, dtype=np.complex128)
    nz = z != 0
    out[nz] = (np.exp(1j * z[nz]) - 1.0) / (1j * z[nz])
    return out


def discretize_dh(f: ContinuumField, coarse: Lattice) -> Field:
    """d_h f on the coarse lattice, via the aliased cell-average multiplier.

    Returned in frequency representation.
    """
    _check_divisible(f.lattice, coarse)
    K = f.lattice.dual
    band = np.abs(K) <= f.bandlimit
    contrib = f.coefficients[band] * cell_average_factor(coarse.h, K[band])
    out = np.zeros(coarse.size, dtype=np.complex128)
    np.add.at(out, coarse.index_of(K[band]), contrib)
    return Field(coarse, out, Representation.FREQUENCY)


def cell_average_fine(f: ContinuumField, coarse: Lattice) -> Field:
    """d_h f by differencing the exact periodic antiderivative sampled on the fine grid."""
    r = _check_divisible(f.lattice, coarse)
    K = f.lattice.dual
    c = f.coefficients
    mean = c[f.lattice.M] / (2.0 * np.pi)
    anti = np.zeros_like(c)
    nz = K != 0
    anti[nz] = c[nz] / (1j * K[nz])
    G = inverse_values(anti, f.lattice.M)[::r]
    values = mean + (np.roll(G, -1) - G) / coarse.h
    return Field(coarse, values, Representation.PHYSICAL)


def interpolation_multiplier(lattice: Lattice, k) -> np.ndarray:
    """P_h(k) = (sin(hk/2)/(hk/2))^2."""
    out = np.sinc(lattice.h * np.asarray(k, dtype=float) / (2.0 * np.pi)) ** 2
    return float(out) if np.ndim(out) == 0 else out


@functools.lru_cache(maxsize=32)
def sampled_interpolation_multiplier(M: int, M_ref: int) -> np.ndarray:
    """Fine-lattice transform of fine samples of the linear interpolant, per unit coarse coefficient."""
    r = M_ref // M
    h = np.pi / M
    K = np.arange(-M_ref, M_ref).astype(float)
    num = np.sin(h * K / 2.0)
    den = r * np.sin(h * K / (2.0 * r))
    out = np.ones_like(K)
    nz = den != 0
    out[nz] = (num[nz] / den[nz]) ** 2
    out.setflags(write=False)
    return out


def _linear_samples(g: Field, target: Lattice) -> np.ndarray:
    r = _check_divisible(target, g.lattice)
    gv = g.physical().values
    s = np.arange(target.size)
    left = s // r
    frac = (s % r) / r
    right = (left + 1) % g.lattice.size
    return (1.0 - frac) * gv[left] + frac * gv[right]


def interpolate_ph(g: Field, target: Lattice) -> ContinuumField:
    """p_h g evaluated pointwise on the fine grid."""
    return ContinuumField.from_samples(target, _linear_samples(g, target))


def interpolate_ph_spectral(g: Field, target: Lattice) -> ContinuumField:
    """p_h g on the fine grid, built from F_h g with the sampled Fejer multiplier."""
    _check_divisible(target, g.lattice)
    G = g.frequency().values
    K = target.dual
    mult = sampled_interpolation_multiplier(g.lattice.M, target.M)
    return ContinuumField(target, mult * G[g.lattice.index_of(K)])


def l2_torus_error(g: Field, u: ContinuumField) -> float:
    """||p_h g - u||_{L2(T)} on the Fourier side, over |K| <= K_ref."""
    _check_refinement(u.lattice, g.lattice)
    G = g.frequency().values
    K = u.lattice.dual
    band = np.abs(K) <= u.bandlimit
    Kb = K[band]
    diff = interpolation_multiplier(g.lattice, Kb) * G[g.lattice.index_of(Kb)] - u.coefficients[band]
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) / (2.0 * np.pi)))


def l2_torus_error_quadrature(g: Field, u: ContinuumField) -> float:
    """Trapezoid-rule cross-check of ``l2_torus_error`` on the fine grid."""
    _check_refinement(u.lattice, g.lattice)
    d = _linear_samples(g, u.lattice) - u.samples()
    return float(np.sqrt(u.lattice.h * np.sum(np.abs(d) ** 2)))


def _embed(coeffs: np.ndarray, M_from: int, M_to: int) -> np.ndarray:
    out = np.zeros(2 * M_to, dtype=np.complex128)
    out[M_to - M_from : M_to + M_from] = coeffs
    return out


def refine(u: ContinuumField, factor: int) -> ContinuumField:
    """Zero-pad onto a reference lattice ``factor`` times finer."""
    if factor < 1 or int(factor) != factor:
        raise DomainError(f"refinement factor must be a positive integer, got {factor!r}")
    fine = Lattice(u.lattice.M * int(factor))
    return ContinuumField(fine, _embed(u.coefficients, u.lattice.M, fine.M))


def continuum_distance(u: ContinuumField, v: ContinuumField) -> float:
    """||u - v||_{L2(T)}, reference grids may differ."""
    M = max(u.lattice.M, v.lattice.M)
    a = _embed(u.coefficients, u.lattice.M, M)
    b = _embed(v.coefficients, v.lattice.M, M)
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) / (2.0 * np.pi)))


def continuum_norm(u: ContinuumField, s: float = 0.0) -> float:
    """H^s(T) norm, (1/2pi) sum <k>^{2s} |u^(k)|^2."""
    w = (1.0 + u.lattice.dual.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(w * np.abs(u.coefficients) ** 2) / (2.0 * np.pi)))


def mode_map(u: ContinuumField) -> Dict[int, complex]:
    """Nonzero amplitudes a_k of e^{ikx}."""
    nz = np.flatnonzero(u.coefficients)
    return {int(u.lattice.dual[i]): complex(u.coefficients[i] / (2.0 * np.pi)) for i in nz}
