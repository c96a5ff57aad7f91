import numpy as np
import pytest

from stableql.models import build_model
from stableql.samplers import NoiseSpec, RngStream
from stableql.sde import simulate_fine, thin
from stableql.stable_core import StableKernel


@pytest.fixture(scope="session")
def kernel1():
    return StableKernel(1.0)


@pytest.fixture(scope="session")
def kernel15():
    return StableKernel(1.5)


@pytest.fixture(scope="session")
def nonlinear_1d():
    return build_model("nonlinear-1d")


@pytest.fixture(scope="session")
def nonlinear_2d():
    return build_model("nonlinear-2d")


@pytest.fixture(scope="session")
def stable_series(nonlinear_1d):
    """Observed path driven by S_1.5 noise, n=500, h=0.01."""
    fine = simulate_fine(
        nonlinear_1d, NoiseSpec("stable", beta=1.5),
        T=5.0, n_fine=25000, x0=1.0, rng=RngStream(314, 1),
    )
    return thin(fine, 50)


@pytest.fixture(scope="session")
def nig_series(nonlinear_1d):
    """Observed path driven by NIG noise, n=1000, h=0.001."""
    fine = simulate_fine(
        nonlinear_1d, NoiseSpec("nig", eta=5.0),
        T=1.0, n_fine=50000, x0=0.0, rng=RngStream(314, 2),
    )
    return thin(fine, 50)
