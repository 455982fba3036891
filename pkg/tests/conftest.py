import pytest

# (criterion number, passed, detail) appended by test_acceptance
ACCEPTANCE = []


@pytest.fixture
def acceptance_record():
    def record(number, passed, detail):
        ACCEPTANCE.append((number, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
        assert passed, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}")
