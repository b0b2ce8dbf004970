import pytest

# one (criterion, passed, detail) record per acceptance check, filled by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((criterion, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
