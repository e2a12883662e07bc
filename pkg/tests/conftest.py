import os
import time

import numpy as np
import pytest

from uplink_rsma.mcs import PRESETS
from uplink_rsma.montecarlo import simulate_success_tables
from uplink_rsma.sinr import SystemConfig

MASTER_SEED = 20240611
BETA_GRID = np.round(np.linspace(0.0, 1.0, 11), 10)
N_TOPOLOGIES = 10_000
N_FADING = 5_000


@pytest.fixture(scope="session")
def full_tables():
    """Success tables for every preset threshold, 11 power splits, N = 2.

    One simulation pass serves all presets and ranks; ``elapsed`` is the
    wall time of that pass.
    """
    thresholds = np.unique(np.concatenate([s.theta for s in PRESETS.values()]))
    start = time.perf_counter()
    tables = simulate_success_tables(SystemConfig(), thresholds, N_TOPOLOGIES, N_FADING, MASTER_SEED,
                                     betas=BETA_GRID, workers=os.cpu_count() or 1)
    return tables, time.perf_counter() - start


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
