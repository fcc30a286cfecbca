import numpy as np
import pytest

from racetrack import Grid, ModelParams


@pytest.fixture
def defaults():
    """Baseline economy: mu=0.6, a=0.5, d=0.005, F=1, Lambda=1, Phi=10, rho=1."""
    return ModelParams()


@pytest.fixture
def grid():
    return Grid(256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--acceptance", choices=("smoke", "full"), default="smoke",
                     help="simulation cells for the figure-count criteria: CI subset or all twelve")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number = marker.args[0]
    ok, details = CRITERIA.get(number, (True, []))
    detail = dict(item.user_properties).get("detail")
    CRITERIA[number] = (ok and report.passed, details + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, details = CRITERIA[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  (" + "; ".join(details) + ")"
        terminalreporter.write_line(line)
