import math

import numpy as np
import pytest

from kdv5_control.control.profile import make_profile, make_uniform_profile
from kdv5_control.evolution.linear import LinearModel
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid8():
    return PeriodicGrid(8)


@pytest.fixture
def grid16():
    return PeriodicGrid(16)


@pytest.fixture
def bump8(grid8):
    return make_profile(grid8, math.pi, math.pi / 2)


@pytest.fixture
def bump16(grid16):
    return make_profile(grid16, math.pi, math.pi / 2)


@pytest.fixture
def uniform8(grid8):
    return make_uniform_profile(grid8)


@pytest.fixture
def closed_loop8(bump8):
    return LinearModel(bump8, feedback_on=True)


def trig_field(grid, cos=None, sin=None, mean=0.0):
    """u = mean + sum a_k cos(kx) + b_k sin(kx)."""
    modes = {0: mean}
    for k, a in (cos or {}).items():
        modes[k] = modes.get(k, 0.0) + 0.5 * a
        modes[-k] = modes.get(-k, 0.0) + 0.5 * a
    for k, b in (sin or {}).items():
        modes[k] = modes.get(k, 0.0) - 0.5j * b
        modes[-k] = modes.get(-k, 0.0) + 0.5j * b
    return SpectralField.from_modes(grid, modes)
