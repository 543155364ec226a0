import os
import sys

# the shared reference constructions live next to the tests
sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion id")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    prev = _CRITERIA.get(key)
    failed = report.failed or (prev is not None and prev[0] == "FAIL")
    if report.when == "call" or report.failed:
        _CRITERIA[key] = ("FAIL" if failed else "PASS", props.get("title", ""), report.duration)


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))
        item.user_properties.append(("title", m.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        status, title, dur = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {title}  ({dur:.2f} s)")
