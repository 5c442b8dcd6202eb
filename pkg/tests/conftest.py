"""Collects acceptance outcomes and prints one line per criterion at the end of a run."""
from collections import OrderedDict

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion exercised by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            entry = _CRITERIA.setdefault(number, {"title": title, "failed": [], "ran": 0, "expected": 0})
            entry["expected"] += 1
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    entry = _CRITERIA[number]
    if report.when == "call":
        entry["ran"] += 1
    if report.outcome != "passed":
        # a skip or an error in setup counts against the criterion too
        entry["failed"].append(report.nodeid.split("::")[-1])

def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        complete = entry["ran"] == entry["expected"] and not entry["failed"]
        status = "PASS" if complete else "FAIL"
        line = f"{status}  {number:2d}. {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(sorted(set(entry['failed'])))})"
        elif not complete:
            line += f"  ({entry['ran']}/{entry['expected']} tests ran)"
        terminalreporter.write_line(line)
