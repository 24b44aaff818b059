import numpy as np
import pytest
from hypothesis import settings

from nmlrscreen.instances import InstanceSpec, generate_instance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20190118)


@pytest.fixture
def toy():
    """X = I2, Y = diag(2, 1): lambda_max = 2, everything by hand."""
    return np.eye(2), np.diag([2.0, 1.0])


@pytest.fixture(scope="session")
def desk_instance():
    X, Y, _ = generate_instance(InstanceSpec(n=20, p=15, q=8, noise_std=0.01, true_rank=3, seed=11))
    return X, Y


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
