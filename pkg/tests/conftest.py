import re

_criteria = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    number, title = int(match.group(1)), match.group(2).replace("_", " ")
    if report.when == "call" or report.failed:
        detail = dict(report.user_properties).get("detail", "")
        _criteria[number] = (title, report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed, detail = _criteria[number]
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
