import pytest

_RESULTS: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the line is echoed and repeated in the summary."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        print(line)
        _RESULTS.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
