import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vortexsphere import spectral
from vortexsphere.hamiltonian import MetricContext

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def rho_small():
    return spectral.random_factor(3, 0.2, np.random.default_rng(7))


@pytest.fixture(scope="session")
def ctx_small(rho_small):
    return MetricContext.from_factor(rho_small)


@pytest.fixture(scope="session")
def ctx_axisym():
    return MetricContext.from_factor(spectral.ConformalFactor.from_triples([(2, 0, 0.3)]))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            ok, detail = RESULTS[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
