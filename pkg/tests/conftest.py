"""Shared pytest hooks.

The acceptance tests register one summary line per criterion on the pytest
config object; the terminal-summary hook prints them after the run so the
pass/fail verdict for every criterion is visible in one block even when
all tests pass.
"""


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
