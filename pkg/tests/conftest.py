import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the pass/fail line for one acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
        _ACCEPTANCE[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
