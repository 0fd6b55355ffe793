"""Shared test plumbing: a small registry that collects one pass/fail line
per acceptance criterion and prints them as a summary block after the run."""

_CRITERIA: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    _CRITERIA.append((name, passed, detail))


def check_criterion(name: str, passed: bool, detail: str = "") -> None:
    """Record the outcome, then fail the test if the criterion did not hold."""
    record_criterion(name, passed, detail)
    assert passed, f"acceptance criterion failed: {name} ({detail})"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" — {detail}"
        terminalreporter.write_line(line)
