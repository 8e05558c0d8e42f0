import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from obstune.space import HyperParamSpace, ParamSpec  # noqa: E402


@pytest.fixture
def unit_square():
    return HyperParamSpace([ParamSpec("x", "continuous", 0.0, 1.0), ParamSpec("y", "continuous", 0.0, 1.0)])


@pytest.fixture
def unit_line():
    return HyperParamSpace([ParamSpec("x", "continuous", 0.0, 1.0)])


_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"{status} criterion {number}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
