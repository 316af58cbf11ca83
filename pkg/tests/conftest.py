import numpy as np
import pytest

from hstrack.hypercube import HyperCube

_acceptance = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_cube(rng):
    def make(h, w, d):
        return HyperCube(rng.random((h, w, d)))

    return make


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _acceptance.append((number, title, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration in sorted(_acceptance):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] AC{number}: {title} ({duration:.2f} s)")
