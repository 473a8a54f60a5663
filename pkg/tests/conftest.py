import pytest
from hypothesis import HealthCheck, Phase, settings

from shockstab import ModelParams, left_state_from_right, solve_profile

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow],
                          derandomize=True,
                          phases=[p for p in Phase if p != Phase.explain])
settings.load_profile("repo")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return ModelParams(gamma=5.0 / 3.0)


@pytest.fixture(scope="session")
def ends(params):
    return left_state_from_right(params, 1.0, 0.0, 0.1)


@pytest.fixture(scope="session")
def profile(params, ends):
    return solve_profile(params, ends)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
