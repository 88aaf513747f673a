import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tmgeom.scenarios import BUILTINS

settings.register_profile(
    "tmgeom",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("tmgeom")


@pytest.fixture(scope="session")
def builtin():
    """Manifold of a built-in scenario, cached per name."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = BUILTINS[name]().manifold()
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
