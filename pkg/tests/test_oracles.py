import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdnls.errors import AliasingError, DomainError, ResolutionError
from fdnls.lattice import Lattice
from fdnls.oracles import (
    continuum_frequency,
    cw_field,
    cw_solution,
    discrete_frequency,
    exact_solution,
    plane_wave_continuum,
    plane_wave_discrete,
    plane_wave_residual_continuum,
    plane_wave_residual_discrete,
    predicted_error_coefficients,
    sharpness_initial_datum,
    sharpness_mode,
    sharpness_spec,
    sobolev_datum,
)
from fdnls.schema import CWSpec, ModelParams, PlaneWaveSpec, Sideband, SobolevSpec
from fdnls.transfer import continuum_norm


@settings(max_examples=25, deadline=None)
@given(
    A=st.floats(0.1, 2.0),
    n=st.integers(-6, 6).filter(lambda n: n != 0),
    s=st.floats(0.0, 1.0),
    alpha=st.sampled_from([0.5, 1.0, 1.5, 2.0]),
    mu=st.sampled_from([-1, 1]),
    t=st.floats(0.0, 3.0),
)
def test_plane_waves_solve_their_equations(A, n, s, alpha, mu, t):
    spec = PlaneWaveSpec(A=A, n=n, s=s)
    p = ModelParams(alpha=alpha, mu=mu)
    assert plane_wave_residual_discrete(spec, p, Lattice(16), t) <= 1e-10
    assert plane_wave_residual_continuum(spec, p, t, Lattice(64)) <= 1e-10


def test_frequencies():
    spec = PlaneWaveSpec(A=1.0, n=2, s=0.5)
    p = ModelParams(alpha=2.0, mu=-1)
    assert continuum_frequency(spec, p) == pytest.approx(4 - 0.5)
    assert discrete_frequency(spec, p, Lattice(1024)) == pytest.approx(3.5, rel=1e-4)


def test_discrete_plane_wave_aliasing():
    with pytest.raises(AliasingError):
        plane_wave_discrete(PlaneWaveSpec(n=4), ModelParams(), Lattice(4), 0.0)


def test_predicted_coefficients():
    c_cont, c_disc = predicted_error_coefficients(PlaneWaveSpec(), ModelParams(alpha=2.0, mu=1), 1.0)
    assert c_cont == pytest.approx(math.sqrt(math.pi / 2))
    assert c_disc == pytest.approx(math.sqrt(2 * math.pi) / 6)
    _, degenerate = predicted_error_coefficients(PlaneWaveSpec(), ModelParams(alpha=2.0, mu=-1), 1.0)
    assert degenerate == 0.0


def test_continuum_plane_wave_amplitude():
    u = plane_wave_continuum(PlaneWaveSpec(A=2.0, n=3, s=1.0), ModelParams(), 0.0, Lattice(32))
    assert u.coefficient(3) == pytest.approx(2 * np.pi * 2.0 / 3.0)


def test_cw_helpers():
    lat = Lattice(8)
    u = cw_solution(lat, 2.0, -1, 0.5)
    np.testing.assert_allclose(u.values, 2.0 * np.exp(2j), atol=1e-14)
    f = cw_field(lat, CWSpec(A=1.0, eps=1e-3, modes=[Sideband(k=8)]))
    np.testing.assert_allclose(f.values, 1.0 + 1e-3 * np.exp(-8j * lat.sites), atol=1e-14)
    with pytest.raises(DomainError):
        cw_field(lat, CWSpec(A=1.0, eps=1e-3, modes=[Sideband(k=9)]))


def test_exact_solution_dispatch():
    ref = Lattice(32)
    p = ModelParams(mu=-1)
    cw = exact_solution(CWSpec(A=1.0), p, 1.0, ref)
    assert cw.coefficient(0) == pytest.approx(2 * np.pi * np.exp(1j))
    assert exact_solution(CWSpec(A=1.0, eps=1e-3, modes=[Sideband(k=1)]), p, 1.0, ref) is None
    assert exact_solution(SobolevSpec(), p, 1.0, ref) is None


def test_sharpness_datum_is_energy_normalized():
    p = ModelParams(alpha=1.5)
    for M in (64, 128, 256):
        lat = Lattice(M)
        k0 = sharpness_mode(lat, p, 0.5)
        assert k0 == math.floor(0.5 ** (-1 / 3.5) * lat.h ** (-2 / 3.5) + 0.5)
        u0 = sharpness_initial_datum(lat, p, 0.5, 0.3)
        assert continuum_norm(u0, 0.75) == pytest.approx(0.3 * math.sqrt(2 * math.pi), rel=0.05)


def test_sharpness_parameter_checks():
    lat = Lattice(64)
    with pytest.raises(DomainError):
        sharpness_spec(lat, ModelParams(), 0.5, 0.8)
    with pytest.raises(DomainError):
        sharpness_spec(lat, ModelParams(), 2.0, 0.3)
    with pytest.raises(ResolutionError):
        sharpness_initial_datum(lat, ModelParams(), 0.5, 0.3, reference=Lattice(8))


def test_sobolev_datum_is_seeded():
    ref = Lattice(64)
    a = sobolev_datum(ref, SobolevSpec(seed=3))
    b = sobolev_datum(ref, SobolevSpec(seed=3))
    c = sobolev_datum(ref, SobolevSpec(seed=4))
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    assert not np.allclose(a.coefficients, c.coefficients)
    with pytest.raises(ResolutionError):
        sobolev_datum(ref, SobolevSpec(k_cut=40))
