import math

import numpy as np
import pytest

from fdnls.dynamics import (
    default_time_step,
    energy_continuum,
    energy_h,
    evolve_nonlinear,
    linear_propagate_continuum,
    linear_propagate_discrete,
    mass_continuum,
    mass_h,
    step_count,
)
from fdnls.errors import BlowUpError
from fdnls.lattice import Field, Lattice, Representation, symbol_sigma_h
from fdnls.schema import ModelParams, SolverConfig
from fdnls.transfer import ContinuumField


def two_mode(lat: Lattice) -> Field:
    x = lat.sites
    return Field(lat, 0.5 * np.exp(1j * x) + 0.3 * np.exp(-2j * x), Representation.PHYSICAL)


def test_step_count_and_default_dt():
    assert step_count(1.0, 0.3) == 4
    assert step_count(1.0, 0.1) == 10
    assert step_count(0.0, 0.1) == 0
    lat = Lattice(8)
    assert default_time_step(lat, ModelParams(alpha=2.0)) == pytest.approx(0.1 / (16 / math.pi) ** 2)


def test_linear_propagation_of_a_plane_wave():
    lat = Lattice(8)
    p = ModelParams(alpha=1.5)
    f = Field.plane_wave(lat, 3)
    g = linear_propagate_discrete(f, 0.7, p)
    assert g.representation is Representation.PHYSICAL
    phase = np.exp(-1j * 0.7 * symbol_sigma_h(lat, 1.5, 3))
    np.testing.assert_allclose(g.values, phase * f.values, atol=1e-12)
    assert linear_propagate_discrete(f.frequency(), 0.7, p).representation is Representation.FREQUENCY


def test_continuum_linear_flow():
    u = ContinuumField.from_modes(Lattice(32), {2: 1.0})
    v = linear_propagate_continuum(u, 0.5, ModelParams(alpha=2.0))
    assert v.coefficient(2) == pytest.approx(2 * np.pi * np.exp(-2j))


@pytest.mark.parametrize("mu", [-1, 1])
def test_plane_wave_is_exact_under_splitting(mu):
    lat = Lattice(8)
    p = ModelParams(alpha=2.0, mu=mu)
    A, n = 0.8, 2
    traj = evolve_nonlinear(Field.plane_wave(lat, n, A), p, SolverConfig(dt=0.1, t_end=1.0))
    omega = symbol_sigma_h(lat, 2.0, n) + mu * A**2
    expected = A * np.exp(1j * n * lat.sites) * np.exp(-1j * omega)
    np.testing.assert_allclose(traj.final.values, expected, atol=1e-12)


def test_recording_stride_keeps_first_and_last():
    traj = evolve_nonlinear(two_mode(Lattice(8)), ModelParams(), SolverConfig(dt=0.1, t_end=1.0, record_stride=3))
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)
    assert traj.snapshots.shape == (5, 16)
    assert traj.dt == pytest.approx(0.1)


def test_mass_is_conserved(rng):
    lat = Lattice(16)
    u0 = Field(lat, rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size))
    traj = evolve_nonlinear(u0, ModelParams(alpha=1.5, mu=-1), SolverConfig(dt=0.01, t_end=1.0, record_stride=10))
    assert traj.log.relative_mass_drift <= 1e-12
    assert traj.log.mass[0] == pytest.approx(mass_h(u0), rel=1e-12)
    assert traj.log.energy[0] == pytest.approx(energy_h(u0, ModelParams(alpha=1.5, mu=-1)), rel=1e-12)


def test_energy_drift_shrinks_fourfold_when_dt_halves():
    lat = Lattice(8)
    p = ModelParams(alpha=2.0, mu=1)
    a = evolve_nonlinear(two_mode(lat), p, SolverConfig(dt=0.01, t_end=1.0, record_stride=100))
    b = evolve_nonlinear(two_mode(lat), p, SolverConfig(dt=0.005, t_end=1.0, record_stride=200))
    ratio = a.log.energy_drift / b.log.energy_drift
    assert 3.5 <= ratio <= 4.5


def test_strang_is_second_order():
    lat = Lattice(8)
    p = ModelParams(alpha=2.0, mu=-1)
    finals = [
        evolve_nonlinear(two_mode(lat), p, SolverConfig(dt=dt, t_end=1.0, record_stride=1000)).final.values
        for dt in (0.01, 0.005, 0.0025)
    ]
    order = math.log2(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))
    assert 1.9 <= order <= 2.1


def test_continuum_run_stays_in_band_and_exact_for_a_mode():
    u0 = ContinuumField.from_modes(Lattice(32), {1: 0.5})
    p = ModelParams(alpha=2.0, mu=-1)
    traj = evolve_nonlinear(u0, p, SolverConfig(dt=0.1, t_end=1.0))
    assert traj.continuum
    final = traj.final
    assert final.coefficient(1) == pytest.approx(2 * np.pi * 0.5 * np.exp(-1j * (1 - 0.25)), abs=1e-12)
    assert mass_continuum(final) == pytest.approx(mass_continuum(u0), rel=1e-12)
    assert energy_continuum(final, p) == pytest.approx(energy_continuum(u0, p), rel=1e-12)


def test_blow_up_is_reported_with_lattice_size():
    lat = Lattice(4)
    bad = np.ones(lat.size, dtype=complex)
    bad[0] = np.nan
    with pytest.raises(BlowUpError) as info:
        evolve_nonlinear(Field(lat, bad), ModelParams(), SolverConfig(dt=0.1, t_end=1.0))
    assert info.value.M == 4
    assert info.value.t == pytest.approx(0.1)
    assert info.value.to_record()["type"] == "BlowUpError"


def test_observer_sees_every_record():
    seen = []
    evolve_nonlinear(two_mode(Lattice(8)), ModelParams(), SolverConfig(dt=0.25, t_end=1.0), observer=lambda t, u: seen.append(t))
    assert seen == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
