import functools

import pytest

from congested_shocks import ModelParams, solve_profile
from congested_shocks.profile import TransitionAnchor

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@functools.lru_cache(maxsize=None)
def cached_profile(epsilon, gamma, v_plus=1.5, anchor=False):
    p = ModelParams(epsilon, gamma, v_plus=v_plus)
    return solve_profile(p, TransitionAnchor() if anchor else None)


@pytest.fixture(scope="session")
def wave_g2():
    return cached_profile(1e-3, 2.0)


@pytest.fixture(scope="session")
def wave_g2_coarse():
    return cached_profile(1e-2, 2.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
