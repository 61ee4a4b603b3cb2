import numpy as np
import pytest

from visnet.corrnet import VisualNetwork
from visnet.ingest import TimeSeriesMatrix


@pytest.fixture
def five_vertex_network():
    # A-B:1, C-D:2, B-C:4, C-E:6, E-B:7
    return VisualNetwork(
        tuple("ABCDE"),
        ((0, 1, 1.0), (2, 3, 2.0), (1, 2, 4.0), (2, 4, 6.0), (1, 4, 7.0)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ts(rows, labels=None):
    rows = np.asarray(rows, dtype=float)
    return TimeSeriesMatrix(rows, [f"c{i}" for i in range(len(rows))], labels)


# acceptance reporting: tests marked ``criterion(n, title)`` get one
# PASS/FAIL line each in the terminal summary
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    ok, dur = _criteria.get(number, (True, 0.0))
    if rep.when == "call" or not rep.passed:
        ok = ok and rep.passed
    dur += rep.duration
    _criteria[number] = (ok, dur)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, dur = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({dur:.2f}s)")
