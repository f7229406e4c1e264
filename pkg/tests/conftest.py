"""Shared pytest plumbing: collect acceptance-criterion verdict lines and
print them after the run, outside output capture."""

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
