import math

import numpy as np
import pytest

from fdnls.dispersive import (
    PhaseSpec,
    admissible_h,
    admissible_time,
    blowup_wavepacket_demo,
    bump_hat,
    bump_profile,
    critical_frequencies,
    dispersive_bound,
    dispersive_bound_check,
    is_admissible,
    kernel_sum,
    lattice_convolve,
    strichartz_smoke_check,
    wavepacket,
    wavepacket_time_sweep,
    _legendre,
)
from fdnls.dynamics import linear_propagate_discrete
from fdnls.errors import DomainError
from fdnls.lattice import Field, Lattice, Representation
from fdnls.schema import ModelParams


def test_critical_frequencies():
    h = math.pi / 16
    xi0, xic = critical_frequencies(h, 2.0)
    assert xic == pytest.approx(math.pi / 2)
    assert xi0 == pytest.approx(xic / h)
    for bad in (1.0, 0.5, 2.5):
        with pytest.raises(DomainError, match=r"alpha in \(1, 2\]"):
            critical_frequencies(h, bad)


@pytest.mark.parametrize("alpha", [1.25, 1.5, 2.0])
def test_phase_inflection_and_derivatives(alpha):
    h = math.pi / 32
    ph = PhaseSpec(h=h, t=0.3, x=0.1, alpha=alpha)
    xi0, _ = critical_frequencies(h, alpha)
    scale = 0.3 * alpha * (2 / h) ** alpha
    assert abs(ph.d2(xi0)) <= 1e-10 * scale
    xi, d = 5.0, 1e-4
    assert ph.d1(xi) == pytest.approx((ph.phase(xi + d) - ph.phase(xi - d)) / (2 * d), rel=1e-6)
    assert ph.d2(xi) == pytest.approx((ph.d1(xi + d) - ph.d1(xi - d)) / (2 * d), rel=1e-6)


def test_kernel_routes_agree():
    lat = Lattice(16)
    p = ModelParams(alpha=1.5)
    a = kernel_sum(lat, p, 0.2, 0.5, "fft")
    b = kernel_sum(lat, p, 0.2, 0.5, "direct")
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_convolution_with_kernel_is_the_linear_flow(rng):
    lat = Lattice(16)
    p = ModelParams(alpha=1.5)
    f = Field(lat, rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size))
    K = kernel_sum(lat, p, 0.4, 1.0)
    np.testing.assert_allclose(
        lattice_convolve(K, f).values, linear_propagate_discrete(f, 0.4, p).values, atol=1e-10
    )
    delta = np.zeros(lat.size)
    delta[lat.M] = 1 / lat.h
    np.testing.assert_allclose(lattice_convolve(K, Field(lat, delta)).values, K.values, atol=1e-12)


def test_admissible_window():
    h, alpha, N = math.pi / 64, 1.5, 0.5
    t_max = admissible_time(h, alpha, N)
    assert t_max == pytest.approx(math.pi**0.5 / 3 * (h / N) ** 0.5)
    assert is_admissible(t_max * (1 + 1e-13), h, alpha, N)
    assert not is_admissible(t_max * 1.01, h, alpha, N)
    assert dispersive_bound(h, 2.0, 1.0, 1.0) == pytest.approx((1 / h) ** (1 / 3))


@pytest.mark.parametrize("alpha", [1.25, 1.5, 2.0])
@pytest.mark.parametrize("N", [1.0, 0.5, 0.25])
def test_kernel_bound_is_uniform_under_doubling(alpha, N):
    res = dispersive_bound_check([alpha], [32, 64, 128, 256], [N])
    assert res["skipped"] == 0
    assert len(res["sup_ratios"]) == 4
    assert res["max_doubling_variation"] < 0.5
    assert all(r["ratio"] > 0 for r in res["rows"])


def test_inadmissible_times_are_skipped():
    res = dispersive_bound_check([2.0], [16, 32, 64], [1.0], t_values=[10.0, 1e-3])
    assert res["skipped"] == 3
    assert all(math.isnan(r["ratio"]) for r in res["rows"] if not r["admissible"])


def test_bump_is_normalized():
    eta, w = _legendre(512)
    assert np.sum(w * bump_hat(eta)) == pytest.approx(1.0, abs=1e-8)
    assert bump_profile([0.0])[0] == pytest.approx(1 / (2 * math.pi), abs=1e-8)
    assert bump_hat(np.array([1.0, -1.5]))[0] == 0.0


def test_wavepacket_skips_coarse_grids():
    res = blowup_wavepacket_demo(ModelParams(alpha=2.0), 1.0, [16, 64, 128, 256])
    assert res["skipped"] == [16]
    assert res["admitted"] == [64, 128, 256]
    assert res["expected_slope"] == pytest.approx(-1 / 3)
    assert admissible_h(1.0, 2.0) == pytest.approx(0.1)


@pytest.mark.parametrize("alpha", [1.5, 2.0])
def test_wavepacket_ratio_follows_predicted_slope(alpha):
    res = blowup_wavepacket_demo(ModelParams(alpha=alpha), 1.0, [64, 128, 256, 512, 1024])
    assert res["expected_slope"] == pytest.approx(-(1 - alpha / 3))
    assert len(res["admitted"]) >= 3
    assert abs(res["slope"] - res["expected_slope"]) <= 0.15


def test_wavepacket_is_localized_near_the_critical_frequency():
    lat = Lattice(128)
    f = wavepacket(lat, 2.0, 1.0)
    F = np.abs(f.frequency().values)
    peak = lat.dual[np.argmax(F)]
    assert abs(peak * lat.h - math.pi / 2) < 0.2
    rows = wavepacket_time_sweep(ModelParams(alpha=2.0), 128, [0.25, 1.0])
    assert [r["admissible"] for r in rows] == [True, True]


def test_strichartz_smoke_check_calibrates_on_first_grid():
    res = strichartz_smoke_check(ModelParams(alpha=1.5), [16, 32, 64], seed=5, n_times=16)
    assert res["C"] == res["rows"][0]["quotient"]
    assert res["rows"][0]["pass"]
    assert all(r["lhs"] > 0 and r["rhs"] > 0 for r in res["rows"])
    again = strichartz_smoke_check(ModelParams(alpha=1.5), [16, 32, 64], seed=5, n_times=16)
    assert again["C"] == res["C"]
