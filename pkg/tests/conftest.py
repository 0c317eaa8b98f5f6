import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gelab.corpus import random_economy
from gelab.economy import make_economy
from gelab.equilibrium import solve_equilibrium
from gelab.scenarios import ScenarioSpec, generate

settings.register_profile("gelab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gelab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def identical():
    return make_economy(0.9, np.ones((3, 7)), np.full((3, 7), 2.0), sigma=0.7)


@pytest.fixture(scope="session")
def dispersed():
    e = generate(ScenarioSpec("dispersed", {}, 3), 12, 0.9, 6)
    return e, solve_equilibrium(e)


@pytest.fixture(scope="session")
def mixed():
    e = random_economy(7, 9, 4)
    return e, solve_equilibrium(e)


@pytest.fixture(scope="session")
def iso():
    e = generate(ScenarioSpec("isoelastic", {}, 1), 15, 0.9, 8)
    return e, solve_equilibrium(e)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
