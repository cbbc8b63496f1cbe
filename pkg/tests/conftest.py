import json
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rotbec.grid import Grid2D
from rotbec.sweep import EXPANSION_GRID, SweepConfig, run_sweep
from rotbec.townes import default_constants, default_profile

settings.register_profile(
    "rotbec", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("rotbec")

DATA = Path(__file__).parent / "data"

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def constants():
    return default_constants()


@pytest.fixture(scope="session")
def grid12():
    return Grid2D(12.0, 256)


@pytest.fixture(scope="session")
def lab_grid():
    return Grid2D(4.0, 256)


@pytest.fixture(scope="session")
def big_profile():
    return default_profile(r_max=30.0)


@pytest.fixture(scope="session")
def expansion_grid():
    return EXPANSION_GRID


# wall-clock seconds of each acceptance sweep, keyed by beta
SWEEP_SECONDS: dict[float, float] = {}


def _sweep(beta):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records = run_sweep(SweepConfig(c0=1.0, beta=beta))
    SWEEP_SECONDS[beta] = time.perf_counter() - t0
    return records


@pytest.fixture(scope="session")
def sweep_beta0():
    return _sweep(0.0)


@pytest.fixture(scope="session")
def sweep_beta01():
    return _sweep(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
