import pytest

_VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record an acceptance criterion's outcome, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        _VERDICTS[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        ok, detail = _VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
