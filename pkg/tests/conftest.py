import numpy as np
import pytest
from hypothesis import settings

from lightfront import XiState, gaussian_pulse, integrate_general
from lightfront.fields import ZeroField

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@pytest.fixture(scope="session")
def pulse4():
    return gaussian_pulse(4.0)


@pytest.fixture(scope="session")
def pulse15():
    return gaussian_pulse(15.0)


@pytest.fixture(scope="session")
def vacuum_traj4(pulse4):
    lo, hi = pulse4.extent
    return integrate_general(pulse4, ZeroField(), XiState.rest(lo), (lo, hi))


def rel_err(a, b):
    """Max error of ``a`` against ``b`` scaled by max |b| (0 when b vanishes)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / (scale if scale > 0 else 1.0))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per criterion; lines are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
