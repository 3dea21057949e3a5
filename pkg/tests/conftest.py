import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fkdv.spectral import make_grid

settings.register_profile(
    "default", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    return make_grid(256, 4 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def mean_zero_field(grid, rng, band=None):
    """Random real field with zero mean and no Nyquist content."""
    from fkdv.spectral import Field

    n = grid.n_points
    k = np.abs(grid.index)
    band = band or n // 4
    spec = np.fft.fft(rng.normal(size=n))
    spec[(k == 0) | (k > band) | (np.arange(n) == grid.nyquist)] = 0
    return Field(grid, np.fft.ifft(spec).real)
