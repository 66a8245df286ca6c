from __future__ import annotations

import numpy as np
import pytest

from fdnls.lattice import Field, Lattice, Representation


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


@pytest.fixture(params=[4, 6, 8, 16])
def lattice(request):
    return Lattice(request.param)


@pytest.fixture
def random_field(rng):
    def make(lat: Lattice) -> Field:
        v = rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size)
        return Field(lat, v, Representation.PHYSICAL)

    return make
