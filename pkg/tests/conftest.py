import time

import pytest

from molcomm.sweep import DESK_SWEEP, generate_grid, run_sweep

ACCEPTANCE_LINES = []
TIMINGS = {}


@pytest.fixture(scope="session")
def desk_dataset():
    """The 3x3x3x5 desk sweep, run once per session on one worker."""
    start = time.perf_counter()
    ds = run_sweep(generate_grid(DESK_SWEEP), workers=1)
    TIMINGS["desk_sweep_s"] = time.perf_counter() - start
    return ds


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
