import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdnls.dynamics import ConservationLog, Trajectory, evolve_nonlinear
from fdnls.errors import DomainError
from fdnls.lattice import Lattice
from fdnls.mi import (
    Regime,
    continuum_unstable_set,
    fit_growth,
    instability_mask,
    max_gain_formula,
    measure_sideband_growth,
    mi_dispersion,
    mode_amplitudes,
    omega_squared,
    recurrence_diagnostic,
    recurrence_sweep,
    region_condition,
    spatial_troughs,
    sweep_max_gain,
)
from fdnls.oracles import cw_field
from fdnls.schema import CWSpec, ModelParams, Sideband, SolverConfig


@settings(max_examples=60, deadline=None)
@given(
    M=st.integers(1, 40),
    alpha=st.floats(0.01, 2.0),
    A=st.floats(0.01, 4.0),
    mu=st.sampled_from([-1, 1]),
)
def test_unstable_set_matches_region_condition(M, alpha, A, mu):
    lat = Lattice(M)
    computed = omega_squared(lat, ModelParams(alpha=alpha, mu=mu), A, lat.dual) < 0
    np.testing.assert_array_equal(computed, region_condition(lat, alpha, mu, A))


@settings(max_examples=30, deadline=None)
@given(M=st.integers(2, 40), alpha=st.floats(0.01, 2.0), A=st.floats(0.01, 4.0))
def test_unstable_set_is_symmetric(M, alpha, A):
    lat = Lattice(M)
    report = mi_dispersion(lat, ModelParams(alpha=alpha, mu=-1), A)
    inner = [k for k in report.unstable_set if abs(k) < M]
    assert sorted(inner) == sorted(-k for k in inner)
    assert 0 not in report.unstable_set


def test_critical_amplitude_set_does_not_depend_on_alpha():
    lat = Lattice(5)
    A = 1 / math.sqrt(2)
    sets = [tuple(lat.dual[region_condition(lat, a, -1, A)]) for a in (0.5, 1.0, 1.5, 2.0)]
    assert all(s == sets[0] for s in sets)
    assert sets[0] == (-1, 1)


def test_defocusing_is_stable():
    lat = Lattice(16)
    report = mi_dispersion(lat, ModelParams(alpha=2.0, mu=1), 2.0)
    assert report.unstable_set == ()
    assert report.omega_max == 0.0


def test_interior_regime():
    lat = Lattice(50)
    report = mi_dispersion(lat, ModelParams(alpha=2.0, mu=-1), 1.0)
    assert report.regime is Regime.INTERIOR
    assert report.k_max == 1
    assert report.xi_m == pytest.approx(1.0, rel=1e-3)
    assert report.omega_max == pytest.approx(report.gain_at(1))
    assert report.omega_max_continuous == pytest.approx(1.0)


def test_saturated_regime_wraps_to_minus_M():
    lat = Lattice(5)
    report = mi_dispersion(lat, ModelParams(alpha=2.0, mu=-1), 4.0)
    assert report.regime is Regime.LATTICE_SATURATED
    assert report.k_max == 5
    B = (2 / lat.h) ** 2
    assert report.omega_max == pytest.approx(math.sqrt(B * (32 - B)))
    assert report.omega_max == pytest.approx(max_gain_formula(lat.h, 2.0, 4.0))


def test_gain_branches_meet_at_crossover():
    h, alpha = math.pi / 5, 2.0
    B = (2 / h) ** alpha
    A = math.sqrt(B)
    assert max_gain_formula(h, alpha, A) == pytest.approx(math.sqrt((2 * A**2 - B) * B), abs=1e-12)
    A_big = math.sqrt(16 * B)
    ratio = max_gain_formula(h, alpha, A_big) / (math.sqrt(2) * A_big * math.sqrt(B))
    assert ratio == pytest.approx(math.sqrt(31 / 32))


def test_instability_mask_broadcasts():
    h = math.pi / 5
    xi = np.linspace(-5, 5, 11)
    A = np.array([0.5, 1.0, 2.0])
    mask = instability_mask(h, xi[None, :], A[:, None], 2.0, -1)
    assert mask.shape == (3, 11)
    assert not mask[:, 5].any()
    assert not instability_mask(h, xi, 1.0, 2.0, 1).any()


def test_continuum_unstable_set():
    assert continuum_unstable_set(1.0, 2.0, 5) == (-1, 1)
    assert continuum_unstable_set(2.0, 1.0, 10) == tuple(k for k in range(-7, 8) if k != 0)


def test_mode_amplitudes_start_at_eps():
    lat = Lattice(16)
    f = cw_field(lat, CWSpec(A=1.0, eps=1e-3, modes=[Sideband(k=2)]))
    amps = mode_amplitudes(lat, f.values, [0, 2, 3])
    np.testing.assert_allclose(amps[0], [1.0, 1e-3, 0.0], atol=1e-14)


def test_fit_growth_on_synthetic_exponential():
    t = np.linspace(0, 20, 2001)
    amp = 1e-6 * np.exp(0.8 * t)
    status, slope, window, n = fit_growth(t, amp, 1e-6, 1.0)
    assert status == "measured"
    assert slope == pytest.approx(0.8, rel=1e-9)
    assert window[0] == pytest.approx(math.log(10) / 0.8, abs=0.02)
    assert fit_growth(t, np.full_like(t, 1e-6), 1e-6, 1.0)[0] == "stable"


@pytest.mark.slow
def test_measured_growth_matches_linear_theory():
    lat = Lattice(50)
    cw = CWSpec(A=1.0, eps=1e-6, modes=[Sideband(k=1)])
    cfg = SolverConfig(dt=1e-3, t_end=15.0, record_stride=10)
    growth = measure_sideband_growth(cw, ModelParams(alpha=2.0, mu=-1), cfg, [1], lat)
    m = growth.measurements[1]
    assert m.status == "measured"
    assert m.relative_error <= 0.05


def test_defocusing_sideband_stays_small():
    lat = Lattice(50)
    cw = CWSpec(A=1.0, eps=1e-6, modes=[Sideband(k=1)])
    cfg = SolverConfig(dt=1e-3, t_end=10.0, record_stride=50)
    growth = measure_sideband_growth(cw, ModelParams(alpha=2.0, mu=1), cfg, [1], lat)
    assert growth.measurements[1].status == "stable"
    with pytest.raises(DomainError):
        measure_sideband_growth(cw, ModelParams(alpha=2.0, mu=1), cfg, [51], lat)


@pytest.mark.slow
def test_recurrence_localizes_only_when_perturbed():
    lat = Lattice(16)
    p = ModelParams(alpha=2.0, mu=-1)
    cfg = SolverConfig(dt=1e-3, t_end=25.0, record_stride=10)
    perturbed = CWSpec(A=1.0, eps=1e-3, modes=[Sideband(k=1), Sideband(k=-1)])
    rec = recurrence_diagnostic(evolve_nonlinear(cw_field(lat, perturbed), p, cfg), 1.0)
    assert rec.localized
    assert 0 < rec.first_localization_time < 25.0
    flat = recurrence_diagnostic(evolve_nonlinear(cw_field(lat, CWSpec(A=1.0)), p, cfg), 1.0)
    assert not flat.localized


def test_gain_sweep_theory_only():
    lat = Lattice(5)
    rows = sweep_max_gain(ModelParams(alpha=2.0, mu=-1), [0.5, 1.0, 4.0], lat, measure=False)
    assert [r.regime for r in rows] == ["Interior", "Interior", "LatticeSaturated"]
    assert rows[2].k_m == 5
    assert all(r.status == "not-measured" for r in rows)
    fixed = sweep_max_gain(ModelParams(alpha=2.0, mu=-1), [1.0], lat, mode=5, measure=False)
    assert fixed[0].k_m == -5
    with pytest.raises(DomainError):
        sweep_max_gain(ModelParams(), [1.0, 0.5], lat, measure=False)


def _sup_trajectory(times, site0, M=4):
    lat = Lattice(M)
    snaps = np.ones((len(times), lat.size), dtype=complex)
    snaps[:, 0] = site0
    log = ConservationLog(times, np.ones(len(times)), np.zeros(len(times)))
    return Trajectory(lat, times, snaps, log)


def test_ripples_on_a_localization_count_once():
    t = np.linspace(0.0, 60.0, 6001)
    bumps = sum(np.exp(-((t - c) ** 2) / 2.0) for c in (10.0, 30.0, 50.0))
    traj = _sup_trajectory(t, 1.0 + 2.0 * bumps + 0.05 * np.sin(40.0 * t))
    rec = recurrence_diagnostic(traj, 1.0)
    assert rec.recurrence_times.size == 3
    assert np.allclose(rec.recurrence_times, [10.0, 30.0, 50.0], atol=0.2)
    assert rec.irregularity_index < 0.02
    assert 8.5 < rec.first_localization_time < 10.0
    # without a prominence floor every ripple crest above the factor is a peak
    assert recurrence_diagnostic(traj, 1.0, prominence=0.0).recurrence_times.size > 3


def test_spatial_troughs_count_dips_of_the_intensity():
    lat = Lattice(50)
    x = lat.sites
    assert spatial_troughs(np.sqrt(1.0 + 0.3 * np.cos(3 * x))) == 3
    assert spatial_troughs(np.sqrt(1.0 + 0.3 * np.cos(3 * x + 0.7))) == 3
    assert spatial_troughs(np.sqrt(1.0 + 0.3 * np.cos(x + math.pi))) == 1
    assert spatial_troughs(np.sqrt(1.0 + 0.01 * np.cos(3 * x))) == 0
    assert spatial_troughs(np.ones(lat.size)) == 0
    assert spatial_troughs(np.zeros(lat.size)) == 0


def test_low_alpha_trough_appears_only_for_large_amplitude():
    lat = Lattice(50)
    cfg = SolverConfig(dt=1e-3, t_end=2.0, record_stride=5)
    small, large = sweep_max_gain(ModelParams(alpha=0.25, mu=-1), [0.1, 10.0], lat, 1e-3, cfg, mode=3)
    assert small.status == "stable"
    assert small.troughs == 0 and math.isnan(small.trough_time)
    assert large.troughs == 3
    assert 0.0 < large.trough_time < 1.0


@pytest.mark.slow
def test_recurrence_is_less_regular_at_small_alpha():
    lat = Lattice(50)
    cw = CWSpec(A=1.0, eps=1e-6, modes=[Sideband(k=1), Sideband(k=-1)])
    cfg = SolverConfig(dt=2e-3, t_end=120.0, record_stride=5)
    classical, low = recurrence_sweep(cw, [2.0, 1.1], -1, cfg, lat)
    assert classical.alpha == 2.0 and low.alpha == 1.1
    for row in (classical, low):
        assert 10.0 < row.first_localization_time < 20.0
        assert row.max_sup_ratio > 2.0
        assert row.relative_mass_drift < 1e-10
    assert classical.recurrence_count >= 3
    assert low.irregularity_index > classical.irregularity_index
