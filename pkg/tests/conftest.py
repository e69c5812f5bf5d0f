import pytest

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line and assert it."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
