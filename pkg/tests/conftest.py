import sys
import pathlib

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion: ``criterion(name, ok, detail)``."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
