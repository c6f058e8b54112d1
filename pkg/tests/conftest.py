import pytest

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, passed, detail):
        ok, prior = ACCEPTANCE.get(number, (True, ""))
        ACCEPTANCE[number] = (ok and bool(passed), "; ".join(filter(None, (prior, detail))))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}")
