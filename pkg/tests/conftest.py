"""Shared pytest hooks.

The acceptance module appends one ``PASS``/``FAIL`` line per criterion to
``ACCEPTANCE_LINES``; they are echoed at the end of the session so they appear
in the captured log even when stdout capture is on.
"""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
