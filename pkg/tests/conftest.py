"""Shared test plumbing: collects acceptance-criterion verdicts and prints
one line per criterion at the end of the run."""

_criterion_lines: list[str] = []


def record_criterion(line: str):
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
