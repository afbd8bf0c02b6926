"""Shared pytest wiring: surfaces the acceptance criterion results in the
terminal summary, where pytest's output capture cannot swallow them."""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
