import re

_ACCEPTANCE = re.compile(r"test_acceptance\.py.*::test_(criterion_\d+)")
_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _ACCEPTANCE.search(report.nodeid)
    if match:
        name = match.group(1).replace("_", " ")
        _results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_results, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(f"{name}: {_results[name]}")
