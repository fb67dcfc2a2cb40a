"""Incentive design for the utility company."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .follower import DEFAULT_TOL, best_response, maximize
from .model import (
    ConfigurationError,
    GameParams,
    LeaderObjective,
    QuadraticIncentive,
    Satisfaction,
    TerminationError,
    add_poly,
    check_objective,
)


@dataclass(frozen=True)
class DesiredPoint:
    v_d: float
    y_d: float
    interior: bool


@dataclass(frozen=True)
class IncentiveDesign:
    """Designed incentive together with the induction post-check.

    ``induced_y`` is the best response under the estimate that was used for
    the design; ``induced`` is false when the target is only a stationary
    point of the estimated consumer payoff and not its global maximizer.
    """

    incentive: QuadraticIncentive
    induced_y: float
    induced: bool

    @property
    def xi1(self) -> float:
        return self.incentive.xi1

    @property
    def xi2(self) -> float:
        return self.incentive.xi2


def desired_point(f_hat: Satisfaction, obj: LeaderObjective, params: GameParams,
                  tol: float = DEFAULT_TOL) -> DesiredPoint:
    """Maximize ``g(y) - v + beta*f_hat(y)`` over ``[0, vbar] x [0, ybar]``.

    The payoff falls strictly with ``v``, so ``v_d = 0``; ``y_d`` uses the
    same search as the consumer's best response.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be > 0, got {tol}")
    check_objective(obj, params)
    beta = params.beta

    def payoff(y):
        return obj(y) + beta * f_hat(y)

    def slope(y):
        return obj.derivative(y) + beta * f_hat.derivative(y)

    f_poly = f_hat.poly_coeffs()
    poly = add_poly(obj.poly_coeffs(), None if f_poly is None else beta * f_poly)
    y_d = maximize(payoff, poly, 0.0, params.ybar, tol, deriv=slope)
    return DesiredPoint(0.0, y_d, params.is_interior(y_d, tol))


def design_incentive(f_hat: Satisfaction, target: DesiredPoint, params: GameParams,
                     tol: float = DEFAULT_TOL) -> IncentiveDesign:
    """Quadratic incentive making ``target.y_d`` stationary for the estimated
    consumer payoff, with ``gamma(y_d) = v_d``.

    Solves ``[[1, 2y], [y, y^2]] xi = [p - f_hat'(y), v]`` at ``y = y_d``.
    """
    y = target.y_d
    if not target.interior or not params.is_interior(y):
        raise TerminationError(f"desired point y_d={y!r} is not interior")
    A = np.array([[1.0, 2.0 * y], [y, y * y]])
    rhs = np.array([params.p - float(f_hat.derivative(y)), target.v_d])
    xi = np.linalg.solve(A, rhs)
    gamma = QuadraticIncentive(xi[0], xi[1])
    response = best_response(gamma, f_hat, params, tol)
    induced = abs(response.y_star - y) <= 10.0 * tol
    return IncentiveDesign(gamma, response.y_star, induced)
