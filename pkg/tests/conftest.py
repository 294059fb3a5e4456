import os

import pytest

RESULTS = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""

    def record(number, passed, detail):
        RESULTS[number] = (bool(passed), detail)
        return passed

    return record


def pytest_collection_modifyitems(config, items):
    if os.environ.get("GIBBSFRAMES_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long-running; set GIBBSFRAMES_LONG=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
