import math

import numpy as np
import pytest

from fdnls.errors import DomainError, ResolutionError
from fdnls.lattice import Field, Lattice, Representation
from fdnls.transfer import (
    ContinuumField,
    cell_average_factor,
    cell_average_fine,
    continuum_distance,
    continuum_norm,
    discretize_dh,
    interpolate_ph,
    interpolate_ph_spectral,
    interpolation_multiplier,
    l2_torus_error,
    l2_torus_error_quadrature,
    mode_map,
    refine,
)


@pytest.fixture
def datum():
    return ContinuumField.from_modes(Lattice(64), {0: 0.2, 1: 0.5 - 0.1j, -2: 0.3, 5: 0.05j})


def test_from_modes_round_trip(datum):
    modes = mode_map(datum)
    assert modes[1] == pytest.approx(0.5 - 0.1j)
    assert datum.coefficient(-2) == pytest.approx(2 * np.pi * 0.3)
    assert datum.coefficient(100) == 0


def test_from_modes_outside_band():
    with pytest.raises(ResolutionError):
        ContinuumField.from_modes(Lattice(16), {8: 1.0})


def test_bandlimit_is_enforced():
    lat = Lattice(16)
    c = ContinuumField(lat, np.ones(lat.size))
    assert np.all(c.coefficients[np.abs(lat.dual) > 7] == 0)


def test_cell_average_factor_at_zero():
    assert cell_average_factor(0.1, np.array([0]))[0] == 1.0


def test_dh_of_constant_is_constant():
    u = ContinuumField.from_modes(Lattice(64), {0: 1.5})
    g = discretize_dh(u, Lattice(8)).physical()
    np.testing.assert_allclose(g.values, 1.5, atol=1e-13)


def test_dh_two_routes_agree(datum):
    coarse = Lattice(8)
    a = discretize_dh(datum, coarse)
    assert a.representation is Representation.FREQUENCY
    b = cell_average_fine(datum, coarse)
    np.testing.assert_allclose(a.physical().values, b.values, atol=1e-12)


def test_dh_requires_divisible_grids(datum):
    with pytest.raises(DomainError):
        discretize_dh(datum, Lattice(12))


def test_interpolation_routes_agree(datum):
    g = discretize_dh(datum, Lattice(8))
    a = interpolate_ph(g, datum.lattice)
    b = interpolate_ph_spectral(g, datum.lattice)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-10)


def test_interpolation_multiplier_values():
    lat = Lattice(8)
    assert interpolation_multiplier(lat, 0) == 1.0
    assert interpolation_multiplier(lat, 2 * lat.M) == pytest.approx(0.0, abs=1e-30)


def test_plane_wave_error_leading_constant():
    M = 64
    u = ContinuumField.from_modes(Lattice(8 * M), {1: 1.0})
    g = discretize_dh(u, Lattice(M))
    err = l2_torus_error(g, u)
    h = math.pi / M
    assert err / (math.sqrt(math.pi / 2) * h) == pytest.approx(1.0, rel=1e-2)
    assert l2_torus_error_quadrature(g, u) == pytest.approx(err, rel=5e-2)


def test_error_needs_fine_reference():
    u = ContinuumField.from_modes(Lattice(32), {1: 1.0})
    with pytest.raises(DomainError):
        l2_torus_error(discretize_dh(u, Lattice(8)), u)


def test_refine_and_distance(datum):
    fine = refine(datum, 2)
    assert fine.lattice.M == 128
    assert continuum_distance(fine, datum) == pytest.approx(0.0, abs=1e-14)
    other = ContinuumField.from_modes(Lattice(64), {1: 1.0})
    assert continuum_norm(other) == pytest.approx(math.sqrt(2 * math.pi))
    assert continuum_distance(other, other.with_coefficients(np.zeros(128))) == pytest.approx(math.sqrt(2 * math.pi))
    with pytest.raises(DomainError):
        refine(datum, 0)


def test_samples_match_modes():
    u = ContinuumField.from_modes(Lattice(32), {2: 0.5})
    x = u.lattice.sites
    np.testing.assert_allclose(u.samples(), 0.5 * np.exp(2j * x), atol=1e-13)
    v = ContinuumField.from_samples(u.lattice, u.samples())
    np.testing.assert_allclose(v.coefficients, u.coefficients, atol=1e-12)
