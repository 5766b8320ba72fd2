"""Shared fixtures and the end-of-run acceptance summary.

The two full preset pipelines are expensive (tens of seconds each), so
they run once per session and every test that needs their reports or
artifacts shares the same output directory.
"""

import pytest

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="session")
def portfolio_run(tmp_path_factory):
    from quantmeu import repro

    outdir = tmp_path_factory.mktemp("portfolio-full")
    report = repro.run_portfolio(str(outdir))
    return report, outdir


@pytest.fixture(scope="session")
def normal_normal_run(tmp_path_factory):
    from quantmeu import repro

    outdir = tmp_path_factory.mktemp("normal-normal-full")
    report = repro.run_normal_normal(str(outdir))
    return report, outdir


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
