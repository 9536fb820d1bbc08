import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lindsim", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lindsim")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def random_hermitian(rng, n):
    a = random_matrix(rng, n)
    return 0.5 * (a + a.conj().T)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
