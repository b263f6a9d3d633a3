import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dpagnostic.harness.config import generate_distribution
from dpagnostic.model import UserDataset

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def noisy_threshold(domain_size, u_star, rho, marginal=None):
    spec = {"kind": "noisy_threshold", "u_star": u_star, "rho": rho}
    if marginal is not None:
        spec["marginal"] = list(marginal)
    return generate_distribution(spec, domain_size)


def random_dataset(rng, domain_size, n, m):
    return UserDataset(
        rng.integers(1, domain_size + 1, size=(n, m)),
        rng.integers(0, 2, size=(n, m)),
        domain_size,
    )


def random_neighbor(rng, z):
    i = int(rng.integers(z.n))
    return z.replace_user(
        i, rng.integers(1, z.domain_size + 1, size=z.m), rng.integers(0, 2, size=z.m)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
