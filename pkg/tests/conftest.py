"""Acceptance bookkeeping: one pass/fail line per criterion in the terminal summary."""

import pytest

CRITERIA: dict[str, dict] = {}
ORDER = {"PASS": 0, "WARN": 1, "SKIP": 2, "FAIL": 3}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by this test")


@pytest.fixture
def note(request):
    """Attach a short detail string to the criterion line; ``warn=True`` marks it WARN."""

    def add(text: str, warn: bool = False):
        request.node.user_properties.append(("warn" if warn else "note", text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    if rep.failed:
        status = "FAIL"
    elif rep.skipped:
        status = "SKIP"
    elif any(k == "warn" for k, _ in item.user_properties):
        status = "WARN"
    else:
        status = "PASS"
    entry = CRITERIA.setdefault(marker.args[0], {"status": "PASS", "notes": [], "seconds": 0.0})
    if ORDER[status] > ORDER[entry["status"]]:
        entry["status"] = status
    entry["notes"] += [v for k, v in item.user_properties if k in ("note", "warn")]
    entry["seconds"] += rep.duration


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, entry in CRITERIA.items():
        detail = "; ".join(entry["notes"])
        line = f"{entry['status']:4s}  {name}  ({entry['seconds']:.1f} s)"
        terminalreporter.write_line(f"{line}  {detail}" if detail else line)
