import numpy as np
import pytest

from crossloss import _backend
from crossloss.loss import PredictionSet

BACKENDS = _backend.available()

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        number, title = crit
        prev = _criteria.get(number, (title, "PASS"))[1]
        status = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
        _criteria[number] = (title, status)


@pytest.fixture(autouse=True)
def _record_criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        request.node.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return _backend.load(request.param)


def make_set(actuals, predicted, name="s"):
    return PredictionSet(name, [f"a{i}" for i in range(len(actuals))], actuals, predicted)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
