"""Collects one verdict per acceptance criterion and prints them at the end."""
import pytest

_VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` under the test's ``criterion`` marker label."""
    marker = request.node.get_closest_marker("criterion")
    label = marker.args[0] if marker else request.node.name

    def record(passed: bool, detail: str) -> bool:
        _VERDICTS[label] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion label")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_VERDICTS, key=lambda s: (int("".join(c for c in s if c.isdigit()) or 0), s)):
        ok, detail = _VERDICTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
