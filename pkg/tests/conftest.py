import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_density(rng, d, rank=None):
    m = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def random_traceless_hermitian(rng, d, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (m + m.conj().T)
    return scale * (h - np.trace(h) / d * np.eye(d))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
