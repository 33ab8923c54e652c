import pytest

_CRITERIA = {}


def record_criterion(number, passed, detail):
    """Keep the worst outcome per acceptance criterion and echo it."""
    prev = _CRITERIA.get(number)
    if prev is None or (prev[0] and not passed):
        _CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def report():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
