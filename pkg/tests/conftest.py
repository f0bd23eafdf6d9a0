"""Shared test plumbing.

The acceptance suite registers one verdict line per criterion; they are
echoed in the terminal summary so the recorded run log shows a single
PASS/FAIL line for each criterion regardless of output capture.
"""

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
