import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mtffm.kapteyn import DesignCoefficients, WaveformParams
from mtffm.optimizer import random_init

settings.register_profile(
    "mtffm", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("mtffm")


def valid_z(rng, K, weighted=None):
    """Random z with sum_k k|z_k| equal to ``weighted`` (uniform in [0.05, 0.95] if None)."""
    z = rng.standard_normal(K)
    if weighted is None:
        weighted = rng.uniform(0.05, 0.95)
    return z * (weighted / np.sum(np.arange(1, K + 1) * np.abs(z)))


@pytest.fixture(scope="session")
def small_params():
    """TBP = 50, K = 8 waveform used by the AF cross checks."""
    return WaveformParams(1.0, 50.0, random_init(8, 0))


@pytest.fixture(scope="session")
def design_params():
    """TBP = 200, K = 32, seed-0 Gaussian initialisation."""
    return WaveformParams(1.0, 200.0, random_init(32, 0))


@pytest.fixture
def zero_params():
    return WaveformParams(1.0, 20.0, DesignCoefficients.zeros(4))


# acceptance criteria report one line each; printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
