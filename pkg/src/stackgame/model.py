"""Domain types and player objectives for the utility/consumer game.

Every function of consumption here is a value object that can be called,
differentiated once, and (when it is a polynomial) expanded into plain
power-basis coefficients. The expansion is what lets the optimizers in
:mod:`stackgame.follower` take the closed-form path for quadratic
objectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np


class StackgameError(Exception):
    """Base class for all package errors."""


class ConfigurationError(StackgameError, ValueError):
    """Malformed scenario or inconsistent inputs."""


class InvalidScenarioError(StackgameError):
    """The game cannot be evaluated (non-finite objective, overflow)."""


class TerminationError(StackgameError):
    """The learning loop cannot continue; ``reason`` says why."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class SatisfactionPoly:
    """Polynomial ``sum_i alpha[i] * y**(i+1)`` (no constant term)."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        if len(alpha) < 1:
            raise ConfigurationError("SatisfactionPoly needs at least one coefficient")
        object.__setattr__(self, "alpha", alpha)

    @property
    def order_j(self) -> int:
        return len(self.alpha) - 1

    @property
    def degree(self) -> int:
        return len(self.alpha)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        # Horner on y * (a0 + a1 y + ... )
        for a in reversed(self.alpha):
            out = out * y + a
        out = out * y
        return out if out.ndim else float(out)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for i in range(len(self.alpha) - 1, -1, -1):
            out = out * y + (i + 1) * self.alpha[i]
        return out if out.ndim else float(out)

    def poly_coeffs(self) -> np.ndarray:
        """Power-basis coefficients ``c`` with ``f(y) = sum_k c[k] y**k``."""
        return np.concatenate(([0.0], self.alpha))


@dataclass(frozen=True)
class LogSatisfaction:
    """``f(y) = scale * ln(y + 1)``."""

    scale: float

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigurationError(f"log satisfaction scale must be > 0, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))

    def __call__(self, y):
        out = self.scale * np.log1p(np.asarray(y, dtype=float))
        return out if out.ndim else float(out)

    def derivative(self, y):
        out = self.scale / (np.asarray(y, dtype=float) + 1.0)
        return out if out.ndim else float(out)

    def poly_coeffs(self) -> None:
        return None


TrueSatisfaction = Union[LogSatisfaction, SatisfactionPoly]
Satisfaction = TrueSatisfaction


@dataclass(frozen=True)
class QuadraticIncentive:
    """Payment ``gamma(y) = xi1*y + xi2*y**2``."""

    xi1: float
    xi2: float

    def __post_init__(self):
        object.__setattr__(self, "xi1", float(self.xi1))
        object.__setattr__(self, "xi2", float(self.xi2))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = self.xi1 * y + self.xi2 * y * y
        return out if out.ndim else float(out)

    def derivative(self, y):
        out = self.xi1 + 2.0 * self.xi2 * np.asarray(y, dtype=float)
        return out if out.ndim else float(out)

    def poly_coeffs(self) -> np.ndarray:
        return np.array([0.0, self.xi1, self.xi2])

    def as_tuple(self) -> tuple:
        return (self.xi1, self.xi2)


ZERO_INCENTIVE = QuadraticIncentive(0.0, 0.0)


@dataclass(frozen=True)
class RevenueDecoupling:
    """Leader prefers less consumption: ``g(y) = -y``."""

    def __call__(self, y):
        out = -np.asarray(y, dtype=float)
        return out if out.ndim else float(out)

    def derivative(self, y):
        out = -np.ones_like(np.asarray(y, dtype=float))
        return out if out.ndim else float(out)

    def poly_coeffs(self) -> np.ndarray:
        return np.array([0.0, -1.0])


@dataclass(frozen=True)
class DemandResponse:
    """Leader tracks a reference: ``g(y) = -(y - yref)**2``."""

    yref: float

    def __post_init__(self):
        object.__setattr__(self, "yref", float(self.yref))

    def __call__(self, y):
        d = np.asarray(y, dtype=float) - self.yref
        out = -d * d
        return out if out.ndim else float(out)

    def derivative(self, y):
        out = -2.0 * (np.asarray(y, dtype=float) - self.yref)
        return out if out.ndim else float(out)

    def poly_coeffs(self) -> np.ndarray:
        return np.array([-self.yref ** 2, 2.0 * self.yref, -1.0])


LeaderObjective = Union[RevenueDecoupling, DemandResponse]


@dataclass(frozen=True)
class GameParams:
    """Price, decision-set bounds and benevolence factor."""

    p: float = 1.0
    ybar: float = 100.0
    vbar: float = 100.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("p", "ybar", "vbar", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.p <= 0:
            raise ConfigurationError(f"price p must be > 0, got {self.p}")
        if self.ybar <= 0:
            raise ConfigurationError(f"ybar must be > 0, got {self.ybar}")
        if self.vbar <= 0:
            raise ConfigurationError(f"vbar must be > 0, got {self.vbar}")
        if self.beta < 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}")

    def is_interior(self, y: float, tol: float = 0.0) -> bool:
        return tol < y < self.ybar - tol


def check_objective(obj: LeaderObjective, params: GameParams) -> None:
    if isinstance(obj, DemandResponse) and not (0.0 <= obj.yref <= params.ybar):
        raise ConfigurationError(
            f"demand-response reference {obj.yref} outside [0, {params.ybar}]")


def add_poly(*coeff_lists: Optional[Sequence[float]]) -> Optional[np.ndarray]:
    """Sum power-basis coefficient vectors; ``None`` if any term is not polynomial."""
    if any(c is None for c in coeff_lists):
        return None
    n = max(len(c) for c in coeff_lists)
    out = np.zeros(n)
    for c in coeff_lists:
        out[: len(c)] += c
    return out


def eval_satisfaction(f: Satisfaction, y):
    return f(y)


def _check_y(y: float, params: GameParams) -> None:
    if not (0.0 <= y <= params.ybar):
        raise ConfigurationError(f"consumption {y} outside [0, {params.ybar}]")


def eval_follower_objective(gamma: QuadraticIncentive, f: Satisfaction,
                            params: GameParams, y: float) -> float:
    """Consumer payoff ``-p*y + gamma(y) + f(y)``."""
    _check_y(y, params)
    return -params.p * y + gamma(y) + f(y)


def eval_leader_objective(obj: LeaderObjective, f: Satisfaction,
                          params: GameParams, v: float, y: float) -> float:
    """Utility payoff ``g(y) - v + beta*f(y)``."""
    check_objective(obj, params)
    _check_y(y, params)
    if not (0.0 <= v <= params.vbar):
        raise ConfigurationError(f"payment {v} outside [0, {params.vbar}]")
    return obj(y) - v + params.beta * f(y)
