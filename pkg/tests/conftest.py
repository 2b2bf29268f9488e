import pytest

_CRITERIA: dict[int, dict] = {}


def _entry(item):
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return None
    number, title = mark.args
    return _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _entry(item)
    if entry is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    failed = rep.failed or rep.skipped or hasattr(rep, "wasxfail")
    if failed:
        entry["ok"] = False
    entry["details"].extend(v for k, v in item.user_properties if k == "detail")
    if failed and hasattr(rep, "wasxfail"):
        entry["details"].append(f"expected failure: {rep.wasxfail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"{status} [{number:2d}] {entry['title']}" + (f" | {detail}" if detail else ""))
