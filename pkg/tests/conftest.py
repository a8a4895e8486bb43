import math

import numpy as np
import pytest

from fpstates import ModelParams, SlabConfig, build_fp_state, indicator, torus_spectrum
from fpstates.spectrum import build_eigenspinor_basis

TWO_PI = 2 * math.pi
ROOT2_MODES = range(3, 15)  # the twelve lambda = sqrt(2) modes on the 2 pi torus


@pytest.fixture(scope="session")
def params():
    return ModelParams(1.0, (TWO_PI,) * 3)


@pytest.fixture(scope="session")
def small_spectrum(params):
    return torus_spectrum(params, 4.0)


@pytest.fixture(scope="session")
def golden_state(small_spectrum):
    return build_fp_state(small_spectrum, SlabConfig(-1, 1), indicator(-1, 1))


@pytest.fixture(scope="session")
def small_basis(params, small_spectrum):
    return build_eigenspinor_basis(params, small_spectrum)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
