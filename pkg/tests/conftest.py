"""Shared pytest hooks: per-criterion pass/fail lines for the acceptance suite."""

from collections import OrderedDict

_RESULTS = OrderedDict()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _CRITERIA.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    entry = _RESULTS.setdefault(number, {"title": title, "outcomes": []})
    measured = dict(report.user_properties).get("measured")
    entry["outcomes"].append((report.nodeid.split("::")[-1], report.outcome, measured))


_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        ok = all(outcome == "passed" for _, outcome, _ in entry["outcomes"])
        failed = [name for name, outcome, _ in entry["outcomes"] if outcome != "passed"]
        measured = "; ".join(m for _, _, m in entry["outcomes"] if m)
        detail = f" [{measured}]" if measured else ""
        if failed:
            detail += f" (failed: {', '.join(failed)})"
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {entry['title']}{detail}")
