CRITERIA = {}


def record(number, passed, detail):
    CRITERIA[number] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        passed, detail = CRITERIA[k]
        terminalreporter.write_line(
            f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
