import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from twtoa.bench import ExperimentSpec  # noqa: E402
from twtoa.bench import draw_target  # noqa: E402
from twtoa.model import ClockModel, NetworkScenario  # noqa: E402

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


@pytest.fixture
def acceptance_log():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)
        print(f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def bench_scenario():
    """Benchmark layout, N=6, K=2, c*sigma = 10 m, a fixed interior target."""
    return ExperimentSpec(n_anchors=6).scenario(np.array([100.0, -250.0]), 10.0)


def make_scenario(rng, n=6, k=2, c_sigma_m=10.0, fix=True, skew=1.0001):
    spec = ExperimentSpec(n_anchors=n, rounds=k, fix_duplicate_anchor=fix, skew=skew)
    return spec.scenario(draw_target(spec, rng), c_sigma_m)


@pytest.fixture
def scenario_factory():
    return make_scenario


@pytest.fixture
def unit_scenario():
    """c = 100 m/s, single anchor at (300, 400), unit clock, zero turn-around."""
    return NetworkScenario(
        anchors=np.array([[300.0, 400.0], [0.0, 10.0], [10.0, 0.0]]),
        target=np.zeros(2),
        target_clock=ClockModel(1.0, 0.0),
        turnaround=0.0, sigma=1.0, gamma=1.0, c=100.0, rounds=1)
