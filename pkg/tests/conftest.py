import numpy as np
import pytest

from trapped_pressure import pressure as pr
from trapped_pressure import trapped as tr
from trapped_pressure.fixtures import make_cat_suspension, make_toy
from trapped_pressure.spacetime import SpacetimeParams


@pytest.fixture(scope="session")
def schw_params():
    return SpacetimeParams(1.0, 0.0, 0.0)


@pytest.fixture(scope="session")
def kerr09_params():
    return SpacetimeParams(1.0, 0.9, 0.0)


@pytest.fixture(scope="session")
def schw_system(schw_params):
    return tr.kerr_system(schw_params)


@pytest.fixture(scope="session")
def kerr09_system(kerr09_params):
    return tr.kerr_system(kerr09_params)


@pytest.fixture(scope="session")
def toy_system():
    return make_toy(nu=0.5)


@pytest.fixture(scope="session")
def cat_system():
    return make_cat_suspension()


@pytest.fixture(scope="session")
def kerr09_spectra(kerr09_system):
    """50 Kerr a=0.9 Lyapunov spectra at T=200, shared by several tests.

    Returns (samples, spectra, build_seconds); the build time feeds the
    wall-clock acceptance bound of the criterion that owns this run.
    """
    import time
    t0 = time.perf_counter()
    samples = [np.asarray(s) for s in kerr09_system.trapped_sampler(50, 0)][:50]
    spectra = [pr.tangent_spectrum(kerr09_system, s, 200.0, seed=i)
               for i, s in enumerate(samples)]
    return samples, spectra, time.perf_counter() - t0
