import pytest

_REPORT: dict[int, list[str]] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one verdict line per acceptance criterion for the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _REPORT.setdefault(number, []).append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_REPORT):
        for line in _REPORT[number]:
            terminalreporter.write_line(line)
