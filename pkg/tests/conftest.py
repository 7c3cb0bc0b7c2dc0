"""Shared fixtures and the acceptance summary hook.

The small stretched line operator built here (N = 36, complex layers on
both sides) is the workhorse of the unit tests: large enough that the
recurrences have something to do, small enough that dense cross-checks
are instant.
"""

from __future__ import annotations

import numpy as np
import pytest

from wavemor import (assemble_operator, assemble_source, build_grid,
                     build_stretching, homogeneous_medium)


def make_stretched_1d(interior=24, pml=6, step=0.1, velocity=1.0,
                      omega0=0.5, strength=1.0):
    grid = build_grid([interior], [step], [pml])
    medium = homogeneous_medium(grid, velocity)
    stretching = build_stretching(grid, omega0=omega0, strength=strength)
    return assemble_operator(grid, medium, stretching)


def make_real_1d(interior=12, step=0.1, velocity=1.0):
    grid = build_grid([interior], [step], [0])
    medium = homogeneous_medium(grid, velocity)
    return assemble_operator(grid, medium, None)


@pytest.fixture
def line_op():
    return make_stretched_1d()


@pytest.fixture
def line_b(line_op):
    mid = line_op.grid.pml[0] + line_op.grid.interior[0] // 2
    return assemble_source(line_op, [mid])


@pytest.fixture
def real_op():
    return make_real_1d()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance summary")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(name: str, ok: bool, detail: str) -> None:
        lines = getattr(request.config, "acceptance_lines", None)
        if lines is None:
            lines = []
            request.config.acceptance_lines = lines
        status = "PASS" if ok else "FAIL"
        lines.append(f"[{status}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return record
