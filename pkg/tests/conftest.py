import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion; returns ``ok``."""

    def _report(number: int, title: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title} ({detail})")
        print(_LINES[-1])
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.line(line)
