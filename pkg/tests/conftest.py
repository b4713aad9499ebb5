import functools

import numpy as np
import pytest

from lmictl import synthesis
from lmictl.model import CostSpec
from lmictl.random_systems import random_system

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def converging_ensemble(count: int = 50, seed: int = 2024):
    """``count`` random systems (n <= 6, N <= 3) whose LMI, FMI and SMI iterations all converge."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        sys = random_system(rng)
        cost = CostSpec.identity(sys.structure)
        try:
            certs = {name: solve(sys, cost)[0] for name, solve in synthesis.SOLVERS.items()}
        except synthesis.NotStabilizable:
            continue
        out.append((sys, cost, certs))
    return tuple(out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
