"""Periodic lattice, discrete Fourier pair, fractional symbol, projections and norms.

Storage convention: arrays are kept in natural order, index ``i`` holds site
``j = i - M`` (or dual frequency ``k = i - M``), so both run over ``[-M, M-1]``.
The transform pair is

    F_h f(k) = h * sum_x f(x) exp(-i k x)
    f(x)     = (1/2pi) * sum_k F_h f(k) exp(i k x)

and fields are stored unnormalized; the ``h`` and ``1/2pi`` factors are
applied at the transform boundary only.
"""
from __future__ import annotations

import enum
import functools
import logging
from dataclasses import dataclass
from typing import List, Literal, Union

import numpy as np
import scipy.fft

from .errors import ContractError, DomainError

logger = logging.getLogger(__name__)

TransformMethod = Literal["auto", "fft", "direct"]
ArrayLike = Union[np.ndarray, float, int]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Representation(str, enum.Enum):
    PHYSICAL = "physical"
    FREQUENCY = "frequency"


@dataclass(frozen=True)
class Lattice:
    """The mesh x_j = h*j, j in [-M, M-1], with h = pi/M."""

    M: int

    def __post_init__(self) -> None:
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"lattice half-size M must be a positive integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return np.pi / self.M

    @property
    def size(self) -> int:
        return 2 * self.M

    @property
    def indices(self) -> np.ndarray:
        return _index_range(self.M)

    @property
    def sites(self) -> np.ndarray:
        return _sites(self.M)

    @property
    def dual(self) -> np.ndarray:
        return _index_range(self.M)

    @property
    def is_power_of_two(self) -> bool:
        return self.M & (self.M - 1) == 0

    @property
    def n_star(self) -> float:
        # 2^(ceil(log2(h/pi)) - 1)
        return 2.0 ** (-self.M.bit_length())

    def wrap(self, k: ArrayLike) -> ArrayLike:
        """Fold an integer frequency into the dual range [-M, M-1]."""
        return (np.asarray(k) + self.M) % (2 * self.M) - self.M

    def index_of(self, k: ArrayLike) -> ArrayLike:
        """Storage index of (the alias of) frequency k."""
        return (np.asarray(k) + self.M) % (2 * self.M)


@functools.lru_cache(maxsize=None)
def _index_range(M: int) -> np.ndarray:
    return _readonly(np.arange(-M, M))


@functools.lru_cache(maxsize=None)
def _sites(M: int) -> np.ndarray:
    return _readonly((np.pi / M) * np.arange(-M, M))


@functools.lru_cache(maxsize=None)
def _parity(M: int) -> np.ndarray:
    # (-1)^k over the dual range
    return _readonly(np.where(np.arange(-M, M) % 2 == 0, 1.0, -1.0))


@functools.lru_cache(maxsize=32)
def dft_matrix(M: int) -> np.ndarray:
    """E[k, j] = exp(-i k x_j); cached read-only so it can be shared across threads."""
    k = np.arange(-M, M)
    return _readonly(np.exp(-1j * np.outer(k, (np.pi / M) * k)))


def _use_fft(M: int, method: TransformMethod) -> bool:
    if method == "fft":
        return True
    if method == "direct":
        return False
    return M & (M - 1) == 0


def forward_values(values: np.ndarray, M: int, method: TransformMethod = "auto") -> np.ndarray:
    """F_h along the last axis of natural-order samples."""
    h = np.pi / M
    if _use_fft(M, method):
        return h * _parity(M) * scipy.fft.fftshift(scipy.fft.fft(values, axis=-1), axes=-1)
    return h * (np.asarray(values) @ dft_matrix(M).T)


def inverse_values(coeffs: np.ndarray, M: int, method: TransformMethod = "auto") -> np.ndarray:
    """F_h^{-1} along the last axis of natural-order coefficients."""
    h = np.pi / M
    if _use_fft(M, method):
        return scipy.fft.ifft(scipy.fft.ifftshift(_parity(M) * coeffs, axes=-1), axis=-1) / h
    return (np.asarray(coeffs) @ dft_matrix(M).conj()) / (2.0 * np.pi)


@dataclass(frozen=True)
class Field:
    lattice: Lattice
    values: np.ndarray
    representation: Representation = Representation.PHYSICAL

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != (self.lattice.size,):
            raise DomainError(
                f"field on M={self.lattice.M} needs {self.lattice.size} values, got shape {v.shape}"
            )
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "representation", Representation(self.representation))

    @classmethod
    def from_function(cls, lattice: Lattice, fn) -> "Field":
        return cls(lattice, fn(lattice.sites), Representation.PHYSICAL)

    @classmethod
    def plane_wave(cls, lattice: Lattice, n: int, amplitude: complex = 1.0) -> "Field":
        return cls(lattice, amplitude * np.exp(1j * n * lattice.sites), Representation.PHYSICAL)

    def physical(self, method: TransformMethod = "auto") -> "Field":
        if self.representation is Representation.PHYSICAL:
            return self
        return inverse_dft(self, method)

    def frequency(self, method: TransformMethod = "auto") -> "Field":
        if self.representation is Representation.FREQUENCY:
            return self
        return forward_dft(self, method)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.lattice, values, self.representation)


def _require(f: Field, rep: Representation, op: str) -> None:
    if f.representation is not rep:
        raise ContractError(f"{op} expects a {rep.value} field, got {f.representation.value}")


def forward_dft(f: Field, method: TransformMethod = "auto") -> Field:
    _require(f, Representation.PHYSICAL, "forward_dft")
    return Field(f.lattice, forward_values(f.values, f.lattice.M, method), Representation.FREQUENCY)


def inverse_dft(f: Field, method: TransformMethod = "auto") -> Field:
    _require(f, Representation.FREQUENCY, "inverse_dft")
    return Field(f.lattice, inverse_values(f.values, f.lattice.M, method), Representation.PHYSICAL)


def symbol_sigma_h(lattice: Lattice, alpha: float, k: ArrayLike) -> ArrayLike:
    """sigma_h(k) = |2/h sin(hk/2)|^alpha."""
    h = lattice.h
    out = np.abs((2.0 / h) * np.sin(h * np.asarray(k, dtype=float) / 2.0)) ** alpha
    return float(out) if np.ndim(out) == 0 else out


def symbol_sigma_0(alpha: float, k: ArrayLike) -> ArrayLike:
    out = np.abs(np.asarray(k, dtype=float)) ** alpha
    return float(out) if np.ndim(out) == 0 else out


def dyadic_scales(lattice: Lattice) -> List[float]:
    """All admissible N, ascending from N_* to 1."""
    out = []
    N = lattice.n_star
    while N <= 1.0:
        out.append(N)
        N *= 2.0
    return out


def _check_dyadic(lattice: Lattice, N: float) -> None:
    ok = N > 0 and float(np.log2(N)).is_integer() and lattice.n_star <= N <= 1.0
    if not ok:
        raise DomainError(
            f"N={N!r} is not a power of two in [N_*, 1] = [{lattice.n_star:g}, 1] for M={lattice.M}"
        )


def shell_mask(lattice: Lattice, N: float) -> np.ndarray:
    """Dual frequencies kept by P_N: the half-open shell MN/2 < |k| <= MN, and for N_* the rest."""
    _check_dyadic(lattice, N)
    k = np.abs(lattice.dual)
    if N == lattice.n_star:
        covered = np.zeros(lattice.size, dtype=bool)
        for other in dyadic_scales(lattice)[1:]:
            covered |= shell_mask(lattice, other)
        return ~covered
    M = lattice.M
    return (k > M * N / 2.0) & (k <= M * N)


def low_mask(lattice: Lattice, N: float) -> np.ndarray:
    _check_dyadic(lattice, N)
    return np.abs(lattice.dual) <= lattice.M * N


def _apply_mask(f: Field, mask: np.ndarray, method: TransformMethod) -> Field:
    F = f.frequency(method)
    out = Field(f.lattice, np.where(mask, F.values, 0.0), Representation.FREQUENCY)
    if f.representation is Representation.PHYSICAL:
        return out.physical(method)
    return out


def littlewood_paley_project(f: Field, N: float, method: TransformMethod = "auto") -> Field:
    """P_N f, returned in the representation of ``f``."""
    return _apply_mask(f, shell_mask(f.lattice, N), method)


def project_low(f: Field, N: float, method: TransformMethod = "auto") -> Field:
    """P_{<=N} f: keeps |k| <= MN."""
    return _apply_mask(f, low_mask(f.lattice, N), method)


def sobolev_norm_h(f: Field, s: float, method: TransformMethod = "auto") -> float:
    F = f.frequency(method).values
    weight = (1.0 + f.lattice.dual.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(weight * np.abs(F) ** 2) / (2.0 * np.pi)))


def lebesgue_norm_h(f: Field, p: float) -> float:
    _require(f, Representation.PHYSICAL, "lebesgue_norm_h")
    if not p >= 1:
        raise DomainError(f"Lebesgue exponent must satisfy p >= 1, got {p!r}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    return float((f.lattice.h * np.sum(a**p)) ** (1.0 / p))


def lattice_inner_h(f: Field, g: Field) -> complex:
    _require(f, Representation.PHYSICAL, "lattice_inner_h")
    _require(g, Representation.PHYSICAL, "lattice_inner_h")
    return complex(f.lattice.h * np.vdot(g.values, f.values))
