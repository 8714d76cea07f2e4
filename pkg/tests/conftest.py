import numpy as np
import pytest

from timelens.photonics import GaussianPulseSource, generate_pulse
from timelens.signal_core import grid_from_span


@pytest.fixture
def small_grid():
    return grid_from_span(2**12, 4e-9)


@pytest.fixture
def chirp_grid():
    # 122 fs steps over 64 ns: resolves the 6.44 ps pulse and holds it chirped to 5.6 ns
    return grid_from_span(2**19, 64e-9)


@pytest.fixture
def pulse(chirp_grid):
    return generate_pulse(GaussianPulseSource(), chirp_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
