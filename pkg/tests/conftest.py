import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hybrid_ebf.channel import build_stats
from hybrid_ebf.harvest import default_pwla
from hybrid_ebf.sysmodel import default_params

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def stats(params):
    return build_stats(params)


@pytest.fixture
def pwla():
    return default_pwla()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion and print it.

    The lines are repeated in the terminal summary so they show up even when
    output capture is on.
    """
    results = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        results[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
