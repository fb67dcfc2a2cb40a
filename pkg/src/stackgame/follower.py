"""Myopic consumer: best response to an announced incentive."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .model import (
    ConfigurationError,
    GameParams,
    InvalidScenarioError,
    QuadraticIncentive,
    Satisfaction,
    add_poly,
)

DEFAULT_TOL = 1e-6
GRID_FRACTION = 1e-3

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


class Boundary(enum.Enum):
    INTERIOR = "interior"
    LOWER = "lower"
    UPPER = "upper"


def classify(y: float, ybar: float, tol: float) -> Boundary:
    if y <= tol:
        return Boundary.LOWER
    if y >= ybar - tol:
        return Boundary.UPPER
    return Boundary.INTERIOR


@dataclass(frozen=True)
class BestResponse:
    y_star: float
    objective_value: float
    boundary: Boundary

    @property
    def interior(self) -> bool:
        return self.boundary is Boundary.INTERIOR


def golden_section_max(func: Callable[[float], float], a: float, b: float,
                       tol: float) -> float:
    """Maximize a unimodal ``func`` on ``[a, b]``; returns the midpoint of the
    final bracket of width <= ``tol``."""
    h = b - a
    if h <= tol:
        return 0.5 * (a + b)
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc = func(c)
    fd = func(d)
    for _ in range(n):
        if fc >= fd:
            b, d, fd = d, c, fc
            h *= INV_PHI
            c = a + INV_PHI2 * h
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            h *= INV_PHI
            d = a + INV_PHI * h
            fd = func(d)
    return 0.5 * (a + b)


def quadratic_argmax(coeffs: np.ndarray, lo: float, hi: float) -> float:
    """Closed-form maximizer of ``c0 + c1 y + c2 y^2`` on ``[lo, hi]``."""
    c1 = coeffs[1] if len(coeffs) > 1 else 0.0
    c2 = coeffs[2] if len(coeffs) > 2 else 0.0
    if c2 < 0:
        return min(max(-c1 / (2.0 * c2), lo), hi)
    # convex or linear: an endpoint wins; ties go to the smaller y
    f_lo = c1 * lo + c2 * lo * lo
    f_hi = c1 * hi + c2 * hi * hi
    return hi if f_hi > f_lo else lo


def _polish(deriv: Callable, y: float, a: float, b: float, tol: float) -> float:
    """Root of the derivative near ``y`` when it brackets a maximum."""
    left = max(a, y - 2.0 * tol)
    right = min(b, y + 2.0 * tol)
    d_left = float(deriv(left))
    d_right = float(deriv(right))
    if d_left > 0.0 > d_right:
        return brentq(deriv, left, right, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return y


def grid_search_max(func: Callable, lo: float, hi: float, tol: float,
                    grid_step: Optional[float] = None,
                    deriv: Optional[Callable] = None) -> float:
    """Global maximizer on ``[lo, hi]``: uniform grid, then golden-section
    refinement of the cells around the best node.

    With ``deriv`` the golden-section result is sharpened to the stationary
    point it brackets; function values alone cannot resolve the argmax much
    below ``sqrt(machine eps)`` relative.
    """
    if grid_step is None:
        grid_step = GRID_FRACTION * (hi - lo)
    n = max(int(math.ceil((hi - lo) / grid_step)), 2)
    grid = np.linspace(lo, hi, n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(func(grid), dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidScenarioError("objective is not finite on the decision set")
    best = int(np.argmax(values))  # first maximum -> smallest y
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, n)]
    y = golden_section_max(lambda t: float(func(t)), a, b, tol)
    if deriv is not None:
        y = _polish(deriv, y, a, b, tol)
    # keep the grid node or an endpoint if refinement did not beat it
    candidates = [(float(func(y)), -y, y), (values[best], -grid[best], grid[best])]
    for edge in (lo, hi):
        if a <= edge <= b:
            candidates.append((float(func(edge)), -edge, edge))
    return float(max(candidates)[2])


def maximize(func: Callable, poly: Optional[np.ndarray], lo: float, hi: float,
             tol: float, deriv: Optional[Callable] = None) -> float:
    """Dispatch between the quadratic closed form and the grid search."""
    if poly is not None and len(np.trim_zeros(poly, "b")) <= 3:
        return float(quadratic_argmax(np.asarray(poly, dtype=float), lo, hi))
    return grid_search_max(func, lo, hi, tol, deriv=deriv)


def follower_objective(gamma: QuadraticIncentive, f: Satisfaction, p: float):
    def objective(y):
        return -p * y + gamma(y) + f(y)
    return objective


def follower_slope(gamma: QuadraticIncentive, f: Satisfaction, p: float):
    def slope(y):
        return -p + gamma.derivative(y) + f.derivative(y)
    return slope


def best_response(gamma: QuadraticIncentive, f: Satisfaction, params: GameParams,
                  tol: float = DEFAULT_TOL, analytic: bool = True) -> BestResponse:
    """Global maximizer of the consumer payoff over ``[0, ybar]``.

    ``analytic=False`` forces the grid/golden-section path even when the
    payoff is an exact quadratic.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be > 0, got {tol}")
    objective = follower_objective(gamma, f, params.p)
    poly = add_poly(np.array([0.0, -params.p]), gamma.poly_coeffs(), f.poly_coeffs())
    if not analytic:
        poly = None
    y = maximize(objective, poly, 0.0, params.ybar, tol,
                 deriv=follower_slope(gamma, f, params.p))
    value = float(objective(y))
    if not math.isfinite(value):
        raise InvalidScenarioError(f"follower objective not finite at y={y}")
    return BestResponse(y, value, classify(y, params.ybar, tol))


def device_best_responses(gammas: Sequence[QuadraticIncentive],
                          fs: Sequence[Satisfaction], params: GameParams,
                          tol: float = DEFAULT_TOL):
    """Per-device best responses and their sum; the payoff is separable."""
    if len(gammas) != len(fs):
        raise ConfigurationError(
            f"{len(gammas)} incentives for {len(fs)} devices")
    if len(fs) == 0:
        raise ConfigurationError("at least one device is required")
    responses = [best_response(g, f, params, tol) for g, f in zip(gammas, fs)]
    return responses, float(sum(r.y_star for r in responses))
