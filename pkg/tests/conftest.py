import pytest

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store a criterion's outcome for the terminal summary, then assert it."""
    def _record(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE[name] = (bool(ok), detail)
        assert ok, f"{name}: {detail}"
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: (int(s[2:].rstrip("ab")), s)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name:<5} {'PASS' if ok else 'FAIL'}  {detail}")
