import re

_CRITERIA: dict[int, list] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m or report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    ok = report.outcome == "passed" and not hasattr(report, "wasxfail")
    _CRITERIA.setdefault(int(m.group(1)), []).append((ok, props.get("detail", ""), report.nodeid.split("::")[-1]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        verdict = "PASS" if all(ok for ok, _, _ in parts) else "FAIL"
        details = "; ".join(f"{name}: {d}" if d else name for _, d, name in parts)
        terminalreporter.write_line(f"criterion {n}: {verdict}  ({details})")
