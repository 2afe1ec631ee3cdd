import pytest

_RESULTS = []


@pytest.fixture
def record():
    """Call ``record(label, ok, detail)`` once per acceptance criterion."""
    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        _RESULTS.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
