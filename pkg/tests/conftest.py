"""Prints one verdict line per acceptance criterion after the run.

Acceptance tests are named ``test_criterion_<n>_...``; a criterion passes
when all of its tests pass, and is reported as skipped when all skipped.
"""

import re

_NAME = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")
_OUTCOMES: dict[int, list[str]] = {}
DETAILS: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        outcomes = _OUTCOMES[n]
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        detail = "; ".join(DETAILS.get(n, []))
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}".rstrip())
