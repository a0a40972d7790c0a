import pytest
from hypothesis import HealthCheck, settings

from gaussreg.gaussian_space import GaussianSpace, sample

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def big1():
    return sample(GaussianSpace(1), 1_000_000, 1, 0)


@pytest.fixture(scope="session")
def mid2():
    return sample(GaussianSpace(2), 200_000, 3, 0)


def pytest_configure(config):
    config.acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
