import numpy as np
import pytest

from simpac import bands


@pytest.fixture(scope="session")
def dw_kappa_100():
    # shared across band/threshold tests; 2e4 reps keeps the session fast
    return bands.mc_quantile("dw", 100, 0.1, reps=20_000, seed=101)


@pytest.fixture(scope="session")
def uniforms_100():
    gen = np.random.Generator(np.random.Philox(7))
    return np.sort(gen.random(100))


@pytest.fixture(scope="session")
def dw_band_100(dw_kappa_100, uniforms_100):
    return bands.dw_band(uniforms_100, 0.1, dw_kappa_100)
