"""Shared fixtures.

Expensive objects (the design space, the d=24 m model, converged reference
cases, the full frequency-domain sweep) are built once per session.
"""
from __future__ import annotations

import time

import pytest

from semisub.config import SweepConfig
from semisub.control import fixed_point_solve, response_grid
from semisub.environment import LoadCase, TABLE4
from semisub.hull_design import ShapeParams, build_design_space, solve_draft_for_C55
from semisub.slow_core import NonlinearModel

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def design_space():
    return build_design_space()


@pytest.fixture(scope="session")
def design_24():
    return solve_draft_for_C55(ShapeParams(24.0, 4.5))


@pytest.fixture(scope="session")
def model_24(design_24):
    return NonlinearModel(design_24)


@pytest.fixture(scope="session")
def reference_case():
    v, hs, tps, _ = TABLE4[3]
    return LoadCase(v, hs, tps[1], 1.0)


@pytest.fixture(scope="session")
def converged_24(model_24, reference_case):
    return fixed_point_solve(model_24, reference_case, omega=response_grid())


@pytest.fixture(scope="session")
def full_sweep():
    """Default frequency-domain sweep (all designs x all operational cases), timed."""
    from semisub.sweep import run_sweep
    cfg = SweepConfig()
    t0 = time.perf_counter()
    results = run_sweep(cfg)
    return results, time.perf_counter() - t0

