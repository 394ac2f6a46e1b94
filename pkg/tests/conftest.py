import pytest

_OUTCOMES: dict[int, tuple[str, str, float, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    # Shared fixtures do their work during setup, so count both phases.
    spent = dict(item.user_properties).get("elapsed", 0.0) + report.duration
    item.user_properties.append(("elapsed", spent))
    if report.when == "setup" and report.passed:
        return
    number, title = mark.args[0], mark.args[1]
    elapsed = spent
    detail = ""
    if report.failed:
        detail = str(getattr(call.excinfo, "value", "")).splitlines()[0][:300] if call.excinfo else ""
    _OUTCOMES[number] = ("PASS" if report.passed else "FAIL", title, elapsed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status, title, elapsed, detail = _OUTCOMES[number]
        line = f"criterion {number}: {status}  {title}  ({elapsed:.1f} s)"
        if detail:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
