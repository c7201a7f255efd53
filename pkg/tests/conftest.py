import re

CRITERION = re.compile(r"test_criterion_(\d+)_")
_results = {}


def pytest_runtest_logreport(report):
    m = CRITERION.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = ""
        for name, text in report.sections:
            if "stdout" in name:
                detail = text.strip().splitlines()[-1] if text.strip() else ""
        _results[k] = ("PASS" if report.passed else "FAIL", report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        status, dur, detail = _results[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  ({dur:.1f} s)  {detail}")
