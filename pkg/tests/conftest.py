"""Shared pytest hooks: one PASS/FAIL line per acceptance criterion."""

from collections import defaultdict

import pytest

_OUTCOMES = defaultdict(list)
_MEASURED = defaultdict(list)
_TITLES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _TITLES[mark.args[0]] = mark.args[1]


@pytest.fixture
def measured(request, record_property):
    """Record ``name=value`` for the criterion summary line."""
    mark = request.node.get_closest_marker("criterion")

    def record(name, value):
        record_property(name, value)
        if mark is not None:
            text = f"{value:.4g}" if isinstance(value, float) else str(value)
            _MEASURED[mark.args[0]].append(f"{name}={text}")

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _OUTCOMES[mark.args[0]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        verdict = "PASS" if all(_OUTCOMES[number]) else "FAIL"
        detail = ", ".join(_MEASURED[number])
        line = f"criterion {number:>2} {verdict}  {_TITLES.get(number, '')}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
