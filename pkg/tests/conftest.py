"""Shared pytest plumbing: collects acceptance verdicts and prints them
as one line per criterion in the terminal summary, where output capture
cannot swallow them."""

import pytest


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record a single pass/fail verdict, then enforce it."""
    def record(tag: str, ok: bool, detail: str) -> None:
        line = f"{tag}: {'PASS' if ok else 'FAIL'} ({detail})"
        request.config.acceptance_lines.append(line)
        assert ok, line
    return record
