"""Oscillatory kernel K_t, phase geometry, the short-time dispersive bound and the
wavepacket that shows the bound cannot be uniform in h."""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .convergence import fit_rate
from .dynamics import linear_propagate_discrete
from .errors import DomainError
from .lattice import (
    Field,
    Lattice,
    Representation,
    inverse_values,
    lebesgue_norm_h,
    low_mask,
    sobolev_norm_h,
    symbol_sigma_h,
)
from .pool import sweep_map
from .schema import ModelParams

logger = logging.getLogger(__name__)

ADMISSIBLE_SLACK = 1e-12
QUADRATURE_NODES = 512


def _check_alpha(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"dispersive estimates need alpha in (1, 2], got {alpha!r}")


@dataclass(frozen=True)
class PhaseSpec:
    """phi(xi) = -t |2/h sin(h xi/2)|^alpha + xi x."""

    h: float
    t: float
    x: float
    alpha: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)

    def phase(self, xi):
        xi = np.asarray(xi, dtype=float)
        return -self.t * np.abs((2.0 / self.h) * np.sin(self.h * xi / 2.0)) ** self.alpha + xi * self.x

    def d1(self, xi):
        """phi' on 0 < xi < pi/h."""
        xi = np.asarray(xi, dtype=float)
        s, c = np.sin(self.h * xi / 2.0), np.cos(self.h * xi / 2.0)
        return -self.t * self.alpha * (2.0 / self.h) ** (self.alpha - 1.0) * s ** (self.alpha - 1.0) * c + self.x

    def d2(self, xi):
        """phi'' on 0 < xi < pi/h; vanishes at xi_0."""
        xi = np.asarray(xi, dtype=float)
        s, c = np.sin(self.h * xi / 2.0), np.cos(self.h * xi / 2.0)
        a = self.alpha
        return -self.t * a * (2.0 / self.h) ** (a - 2.0) * s ** (a - 2.0) * ((a - 1.0) * c**2 - s**2)


def critical_frequencies(h: float, alpha: float) -> Tuple[float, float]:
    """(xi_0, xi_c): the inflection point of the phase on the h-lattice and on the unit lattice."""
    _check_alpha(alpha)
    base = math.acos(alpha**-0.5)
    return 2.0 * base / h, 2.0 * base


def kernel_sum(
    lattice: Lattice, params: ModelParams, t: float, N: float, method: Literal["fft", "direct"] = "fft"
) -> Field:
    """K_t(x) = (1/2pi) sum_{|k| <= MN} exp(i(-t sigma_h(k) + k x))."""
    mask = low_mask(lattice, N)
    k = lattice.dual
    coeff = np.where(mask, np.exp(-1j * t * symbol_sigma_h(lattice, params.alpha, k)), 0.0)
    if method == "fft":
        values = inverse_values(coeff, lattice.M)
    else:
        kk = k[mask]
        phases = np.exp(1j * (np.outer(lattice.sites, kk)))
        values = phases @ coeff[mask] / (2.0 * np.pi)
    return Field(lattice, values, Representation.PHYSICAL)


def lattice_convolve(K: Field, f: Field) -> Field:
    """(K * f)(x) = h sum_y K(x - y) f(y) on the periodic lattice."""
    lat = f.lattice
    j = lat.indices
    idx = lat.index_of(np.subtract.outer(j, j))
    kv = K.physical().values
    return Field(lat, lat.h * (kv[idx] @ f.physical().values), Representation.PHYSICAL)


def admissible_time(h: float, alpha: float, N: float) -> float:
    """(pi^{2-alpha}/(2 alpha)) (h/N)^{alpha-1}."""
    return math.pi ** (2.0 - alpha) / (2.0 * alpha) * (h / N) ** (alpha - 1.0)


def is_admissible(t: float, h: float, alpha: float, N: float) -> bool:
    return abs(t) <= admissible_time(h, alpha, N) * (1.0 + ADMISSIBLE_SLACK)


def dispersive_bound(h: float, alpha: float, N: float, t: float) -> float:
    """|alpha-1|^{-1/3} (N/h)^{1-alpha/3} |t|^{-1/3}."""
    return abs(alpha - 1.0) ** (-1.0 / 3.0) * (N / h) ** (1.0 - alpha / 3.0) * abs(t) ** (-1.0 / 3.0)


def dispersive_bound_check(
    alphas: Sequence[float],
    M_list: Sequence[int],
    N_list: Sequence[float],
    t_fractions: Sequence[float] = (1.0, 0.5, 0.25, 0.125, 0.0625),
    t_values: Optional[Sequence[float]] = None,
    mu: int = -1,
) -> Dict[str, Any]:
    """Ratio ||K_t||_inf / bound for the lattice delta (extremal for L1 -> Linf).

    Times come either as fractions of the admissible window or as absolute
    values; absolute times outside the window are skipped and flagged.
    """
    cells = []
    for a in alphas:
        _check_alpha(a)
        for M in M_list:
            for N in N_list:
                h = math.pi / M
                if t_values is None:
                    times = [f * admissible_time(h, a, N) for f in t_fractions]
                else:
                    times = list(t_values)
                for t in times:
                    cells.append((a, M, N, t))

    def cell(c):
        a, M, N, t = c
        lat = Lattice(M)
        h = lat.h
        row = {"alpha": a, "M": M, "N": N, "t": t, "t_max": admissible_time(h, a, N)}
        if t == 0 or not is_admissible(t, h, a, N):
            row.update(admissible=False, sup_kernel=float("nan"), bound=float("nan"), ratio=float("nan"))
            return row
        K = kernel_sum(lat, ModelParams(alpha=a, mu=mu), t, N)
        sup = lebesgue_norm_h(K, math.inf)
        bound = dispersive_bound(h, a, N, t)
        row.update(admissible=True, sup_kernel=sup, bound=bound, ratio=sup / bound)
        return row

    rows = sweep_map(cell, cells)
    skipped = sum(1 for r in rows if not r["admissible"])
    if skipped:
        logger.warning("dispersive bound: %d cells outside the admissible window were skipped", skipped)
    sup_by: Dict[Tuple[float, int], float] = {}
    for r in rows:
        if r["admissible"]:
            key = (r["alpha"], r["M"])
            sup_by[key] = max(sup_by.get(key, 0.0), r["ratio"])
    variation = 0.0
    for a in alphas:
        Ms = [M for M in M_list if (a, M) in sup_by]
        for M1, M2 in zip(Ms, Ms[1:]):
            variation = max(variation, abs(sup_by[(a, M2)] / sup_by[(a, M1)] - 1.0))
    sups = [{"alpha": a, "M": M, "sup_ratio": v} for (a, M), v in sorted(sup_by.items())]
    return {"rows": rows, "sup_ratios": sups, "max_doubling_variation": variation, "skipped": skipped}


@functools.lru_cache(maxsize=1)
def _bump_normalization() -> float:
    val, _ = integrate.quad(lambda e: math.exp(-1.0 / (1.0 - e * e)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def bump_hat(eta) -> np.ndarray:
    """Normalized smooth bump on (-1, 1) with unit integral."""
    eta = np.asarray(eta, dtype=float)
    out = np.zeros_like(eta)
    inside = np.abs(eta) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - eta[inside] ** 2)) / _bump_normalization()
    return out


@functools.lru_cache(maxsize=1)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def bump_profile(y, nodes: int = QUADRATURE_NODES) -> np.ndarray:
    """psi(y) = (1/2pi) int psi^(eta) e^{i eta y} d eta by Gauss-Legendre quadrature."""
    eta, w = _legendre(nodes)
    y = np.asarray(y, dtype=float)
    return (np.exp(1j * np.outer(y, eta)) @ (w * bump_hat(eta))) / (2.0 * np.pi)


def admissible_h(T: float, alpha: float, safety: float = 0.1) -> float:
    """Largest h allowed for the wavepacket demo at horizon T."""
    return safety * min(
        T ** (-1.0 / (3.0 - alpha)),
        T ** (1.0 / alpha) * abs(alpha - 1.0) ** (3.0 * (2.0 - alpha) / (2.0 * alpha)),
        abs(alpha - 1.0) ** ((2.0 - alpha) / 2.0),
    )


def wavepacket(lattice: Lattice, alpha: float, T: float) -> Field:
    """f(x_j) = e^{i xi_c j} psi(tau^{-1/3} j), tau = T/h^alpha, on the unit-lattice pullback."""
    tau = T / lattice.h**alpha
    _, xi_c = critical_frequencies(1.0, alpha)
    j = lattice.indices.astype(float)
    values = np.exp(1j * xi_c * j) * bump_profile(tau ** (-1.0 / 3.0) * j)
    return Field(lattice, values, Representation.PHYSICAL)


def wavepacket_ratio(lattice: Lattice, params: ModelParams, T: float, p: float = 1.0, q: float = math.inf) -> float:
    f = wavepacket(lattice, params.alpha, T)
    g = linear_propagate_discrete(f, T, params)
    return lebesgue_norm_h(g, q) / lebesgue_norm_h(f, p)


def blowup_wavepacket_demo(
    params: ModelParams,
    T: float,
    M_list: Sequence[int],
    p: float = 1.0,
    q: float = math.inf,
    safety: float = 0.1,
) -> Dict[str, Any]:
    """||U_h(T) f||_{L^q_h} / ||f||_{L^p_h} across h; grows like h^{-(1-alpha/3)(1/p-1/q)}."""
    _check_alpha(params.alpha)
    h_cap = admissible_h(T, params.alpha, safety)
    admitted = [M for M in M_list if math.pi / M <= h_cap]
    skipped = [M for M in M_list if M not in admitted]
    if skipped:
        logger.warning("wavepacket: h too large for M=%s (h must be <= %.4g), skipped", skipped, h_cap)
    ratios = sweep_map(lambda M: wavepacket_ratio(Lattice(M), params, T, p, q), admitted)
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    expected = -(1.0 - params.alpha / 3.0) * (1.0 / p - inv_q)
    slope = float("nan")
    if len(admitted) >= 2:
        slope, _, _ = fit_rate([math.pi / M for M in admitted], ratios)
    rows = [{"M": M, "h": math.pi / M, "ratio": r} for M, r in zip(admitted, ratios)]
    logger.info("wavepacket alpha=%g: slope %.4f (expected %.4f)", params.alpha, slope, expected)
    return {
        "rows": rows,
        "admitted": admitted,
        "skipped": skipped,
        "h_cap": h_cap,
        "slope": slope,
        "expected_slope": expected,
    }


def wavepacket_time_sweep(
    params: ModelParams, M: int, T_list: Sequence[float], p: float = 1.0, q: float = math.inf, safety: float = 0.1
) -> List[Dict[str, Any]]:
    """Ratio at fixed h for growing T; trends like T^{-(1/3)(1/p-1/q)}."""
    lat = Lattice(M)
    rows = []
    for T in T_list:
        ok = lat.h <= admissible_h(T, params.alpha, safety)
        ratio = wavepacket_ratio(lat, params, T, p, q) if ok else float("nan")
        rows.append({"T": T, "M": M, "admissible": ok, "ratio": ratio})
    return rows


def strichartz_smoke_check(
    params: ModelParams,
    M_list: Sequence[int],
    seed: int = 0,
    n_times: int = 64,
    s: float = 1.0 / 3.0 + 0.01,
    tolerance: float = 2.0,
) -> Dict[str, Any]:
    """Sampled ||U_h(t) f||_{L^6([0,1]; L^inf_h)} <= C ||f||_{H^s_h}, C calibrated on the first grid."""
    times = np.linspace(0.0, 1.0, n_times)
    dt = times[1] - times[0]
    rows = []
    for M in M_list:
        lat = Lattice(M)
        rng = np.random.Generator(np.random.Philox(seed))
        k = lat.dual.astype(float)
        coeff = (1.0 + k**2) ** -0.5 * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=lat.size))
        f = Field(lat, coeff, Representation.FREQUENCY)
        sig = symbol_sigma_h(lat, params.alpha, lat.dual)
        evolved = inverse_values(coeff[None, :] * np.exp(-1j * np.outer(times, sig)), M)
        sup = np.max(np.abs(evolved), axis=1)
        lhs = float((dt * np.sum(sup**6)) ** (1.0 / 6.0))
        rhs = sobolev_norm_h(f, s)
        rows.append({"M": M, "lhs": lhs, "rhs": rhs, "quotient": lhs / rhs})
    C = rows[0]["quotient"]
    for r in rows:
        r["pass"] = bool(r["quotient"] <= tolerance * C)
    return {"rows": rows, "C": C, "s": s, "pass": all(r["pass"] for r in rows)}
