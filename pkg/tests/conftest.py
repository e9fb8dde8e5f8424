import pytest

_VERDICTS = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict: ``criterion(label, ok, detail)``; returns `ok`."""

    def record(label, ok, detail=""):
        line = f"CRITERION {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
