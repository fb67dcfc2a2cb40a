"""Shared fixtures and oracles for the test suite."""

import math

import numpy as np
import pytest

from stackgame import (
    GameParams,
    LogSatisfaction,
    QuadraticIncentive,
    SatisfactionPoly,
)

# Acceptance lines collected by tests/test_acceptance.py and echoed at the end
# of the session so they stay visible without ``-s``.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_concave_poly(rng, degree):
    """Polynomial satisfaction with positive slope at 0 and falling slope.

    The derivative is ``c0 - sum_i c_i (y/s)^i`` so the stationary points of
    the consumer payoff land at a few energy units for moderate incentives.
    """
    s = rng.uniform(3.0, 8.0)
    c = rng.uniform(0.5, 2.0, size=degree)
    c[0] = rng.uniform(4.0, 8.0)
    return SatisfactionPoly([c[0]] + [-c[i] / ((i + 1) * s**i) for i in range(1, degree)])


def stationary_incentive(f, y, xi2, p=1.0):
    """Incentive with curvature ``xi2`` that makes ``y`` stationary under ``f``."""
    return QuadraticIncentive(p - float(f.derivative(y)) - 2.0 * xi2 * y, xi2)


@pytest.fixture
def reference_params():
    return GameParams(p=1.0, ybar=100.0, vbar=100.0, beta=0.75)


@pytest.fixture
def log10():
    return LogSatisfaction(10.0)


@pytest.fixture
def bootstraps():
    return QuadraticIncentive(10.0, -1.0), QuadraticIncentive(15.0, -1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def log_stationary(scale, xi1, xi2, p=1.0):
    """Root of ``-p + xi1 + 2 xi2 y + scale/(y+1) = 0`` for ``xi2 < 0`` (closed form)."""
    # (xi1 - p + 2 xi2 y)(y + 1) + scale = 0  ->  2 xi2 y^2 + (xi1 - p + 2 xi2) y + (xi1 - p + scale) = 0
    a, b, c = 2.0 * xi2, xi1 - p + 2.0 * xi2, xi1 - p + scale
    disc = math.sqrt(b * b - 4 * a * c)
    roots = [(-b + disc) / (2 * a), (-b - disc) / (2 * a)]
    return max(r for r in roots if r > -1)
