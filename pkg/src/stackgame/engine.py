"""Closed-loop simulation: issue incentives, observe, learn, redesign.

Rounds 0 and 1 issue the bootstrap incentives. From round 2 on, each device's
satisfaction estimate is refit on every observation so far, the leader picks
a desired point under that estimate and designs the incentive that is then
issued. Observations are the consumer's true best responses, optionally
perturbed by a bounded disaggregation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .estimator import (
    DEFAULT_FIT_TOL,
    EstimationResult,
    ObservationHistory,
    build_design_matrix,
    build_rhs,
    kkt_fit,
    minimal_order_fit,
    numerical_rank,
)
from .follower import DEFAULT_TOL, device_best_responses
from .leader import design_incentive, desired_point
from .model import (
    ConfigurationError,
    GameParams,
    LeaderObjective,
    QuadraticIncentive,
    RevenueDecoupling,
    SatisfactionPoly,
    TerminationError,
    TrueSatisfaction,
    check_objective,
)

MAX_ITERS_REACHED = "max_iters reached"


@dataclass(frozen=True)
class Device:
    satisfaction: TrueSatisfaction
    gamma0: QuadraticIncentive
    gamma1: QuadraticIncentive


@dataclass(frozen=True)
class Scenario:
    params: GameParams
    devices: tuple
    objective: LeaderObjective = RevenueDecoupling()
    max_iters: int = 20
    epsilon: float = 0.0
    seed: int = 0
    fit_tol: float = DEFAULT_FIT_TOL
    tol: float = DEFAULT_TOL
    max_order: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        if len(self.devices) < 1:
            raise ConfigurationError("scenario needs at least one device")
        for d in self.devices:
            if d.gamma0 is None or d.gamma1 is None:
                raise ConfigurationError("every device needs gamma0 and gamma1")
        if self.max_iters < 2:
            raise ConfigurationError(f"max_iters must be >= 2, got {self.max_iters}")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")
        if not self.fit_tol > 0:
            raise ConfigurationError(f"fit_tol must be > 0, got {self.fit_tol}")
        if self.max_order is not None and self.max_order < 1:
            raise ConfigurationError(f"max_order must be >= 1, got {self.max_order}")
        check_objective(self.objective, self.params)

    @property
    def n_devices(self) -> int:
        return len(self.devices)


@dataclass(frozen=True)
class DeviceRecord:
    device: int
    xi1: float
    xi2: float
    y_true: float
    y_hat: float
    leader_objective: float = math.nan
    alpha: Optional[tuple] = None
    fit_method: Optional[str] = None
    fit_residual: Optional[float] = None
    fit_accepted: Optional[bool] = None
    rank_deficient: bool = False
    v_d: Optional[float] = None
    y_d: Optional[float] = None
    induced: Optional[bool] = None
    relerr: Optional[tuple] = None


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    devices: tuple
    aggregate_y: float
    leader_objective: float
    flags: tuple = ()
    stop_reason: Optional[str] = None

    @property
    def hypotheses_ok(self) -> bool:
        return not self.flags


def disaggregate(true_responses: Sequence[float], epsilon: float,
                 rng: Optional[np.random.Generator], ybar: float = math.inf) -> List[float]:
    """Simulated disaggregation: ``clip(y + u, 0, ybar)`` with ``u ~ U[-eps, eps]``."""
    if epsilon < 0:
        raise ConfigurationError(f"epsilon must be >= 0, got {epsilon}")
    y = np.asarray(true_responses, dtype=float)
    if epsilon == 0:
        return [float(v) for v in y]
    noise = rng.uniform(-epsilon, epsilon, size=y.shape)
    return [float(v) for v in np.clip(y + noise, 0.0, ybar)]


def relative_errors(estimate: Sequence[float], truth: Sequence[float]) -> tuple:
    n = max(len(estimate), len(truth))
    est = np.zeros(n)
    tru = np.zeros(n)
    est[: len(estimate)] = estimate
    tru[: len(truth)] = truth
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(tru != 0, np.abs(est - tru) / np.abs(tru), np.nan)
    return tuple(float(e) for e in err)


def _search_order(history: ObservationHistory, truth: TrueSatisfaction,
                  scenario: Scenario) -> int:
    max_order = scenario.max_order
    if scenario.epsilon > 0 and isinstance(truth, SatisfactionPoly):
        max_order = truth.order_j
    k = len(history) - 1
    return max(1, k if max_order is None else min(max_order, k))


def full_rank_data(history: ObservationHistory, truth: TrueSatisfaction, order_j: int) -> bool:
    """Rank hypothesis behind exact recovery.

    With a polynomial truth of order ``d`` and at least ``d + 1`` records, the
    stacked system at order ``d`` must have full column rank. Otherwise (log
    truth, or too few records yet) the system at the accepted order must have
    full rank.
    """
    order = order_j
    if isinstance(truth, SatisfactionPoly) and len(history) >= truth.order_j + 1:
        order = truth.order_j
    Y = build_design_matrix(history, order)
    return numerical_rank(Y) == min(Y.shape)


def _fit(history: ObservationHistory, truth: TrueSatisfaction, scenario: Scenario
         ) -> EstimationResult:
    noisy = scenario.epsilon > 0
    fit_tol = max(scenario.fit_tol, scenario.epsilon) if noisy else scenario.fit_tol
    top = _search_order(history, truth, scenario)

    if history.all_interior():
        fit = minimal_order_fit(history, fit_tol, top)
        if fit.accepted:
            return fit
        if not noisy:
            raise TerminationError(
                f"stationarity data not in range of design matrix up to order {top}"
                f" (relative residual {fit.residual:.3g})")
        return _kkt_accepting(history, fit.order_j, fit_tol, force=True)

    scale = max(float(np.linalg.norm(build_rhs(history))), 1.0)
    best = None
    for j in range(1, top + 1):
        fit = _kkt_accepting(history, j, fit_tol, scale=scale)
        if fit.accepted:
            return fit
        if best is None or fit.residual < best.residual:
            best = fit
    return best


def _kkt_accepting(history, order_j, fit_tol, scale=None, force=False):
    if scale is None:
        scale = max(float(np.linalg.norm(build_rhs(history))), 1.0)
    fit = kkt_fit(history, order_j)
    ok = force or math.sqrt(fit.residual) / scale <= fit_tol
    return replace(fit, accepted=ok)


def _true_leader_values(scenario: Scenario, gammas, ys) -> List[float]:
    """Per-device ``g(y) - gamma(y) + beta*f(y)`` with the payment actually made."""
    beta = scenario.params.beta
    return [float(scenario.objective(y) - gamma(y) + beta * dev.satisfaction(y))
            for dev, gamma, y in zip(scenario.devices, gammas, ys)]


def simulate(scenario: Scenario, disaggregation: bool = True) -> List[IterationRecord]:
    """Run the loop for ``scenario.max_iters`` rounds or until it terminates.

    The final record carries ``stop_reason``; early termination (boundary
    desired point, failed range test) is a recorded outcome, not an error.
    """
    params = scenario.params
    tol = scenario.tol
    truths = [d.satisfaction for d in scenario.devices]
    histories = [ObservationHistory((), params) for _ in truths]
    rng = np.random.default_rng(scenario.seed)
    records: List[IterationRecord] = []
    stop_reason = MAX_ITERS_REACHED

    for it in range(scenario.max_iters):
        flags = []
        per_device = []
        if it < 2:
            gammas = [d.gamma0 if it == 0 else d.gamma1 for d in scenario.devices]
            per_device = [{} for _ in gammas]
        else:
            gammas = []
            try:
                for ell, (hist, truth) in enumerate(zip(histories, truths)):
                    failed = []
                    try:
                        fit = _fit(hist, truth, scenario)
                        rank_deficient = fit.rank_deficient or not full_rank_data(
                            hist, truth, fit.order_j)
                        if rank_deficient:
                            failed.append("rank-deficient fit")
                        if not fit.accepted:
                            failed.append("fit residual above tolerance")
                        target = desired_point(fit.alpha, scenario.objective, params, tol)
                        design = design_incentive(fit.alpha, target, params, tol)
                    except TerminationError as exc:
                        note = f" [{'; '.join(failed)}]" if failed else ""
                        raise TerminationError(f"iteration {it}, device {ell}: {exc.reason}{note}")
                    gammas.append(design.incentive)
                    flags.extend(f"device {ell}: {why}" for why in failed)
                    if not design.induced:
                        flags.append(f"device {ell}: target not globally induced")
                    per_device.append(dict(
                        alpha=fit.alpha.alpha, fit_method=fit.method.value,
                        fit_residual=fit.residual, fit_accepted=fit.accepted,
                        rank_deficient=rank_deficient, v_d=target.v_d,
                        y_d=target.y_d, induced=design.induced,
                        relerr=(relative_errors(fit.alpha.alpha, truth.alpha)
                                if isinstance(truth, SatisfactionPoly) else None)))
            except TerminationError as exc:
                stop_reason = exc.reason
                break

        responses, aggregate = device_best_responses(gammas, truths, params, tol)
        y_true = [r.y_star for r in responses]
        if disaggregation:
            y_hat = disaggregate(y_true, scenario.epsilon, rng, params.ybar)
        else:
            y_hat = list(y_true)
        for ell, yh in enumerate(y_hat):
            if not params.is_interior(yh, tol):
                flags.append(f"device {ell}: response on boundary")
            histories[ell] = histories[ell].append(gammas[ell], yh)

        leader_values = _true_leader_values(scenario, gammas, y_true)
        devices = tuple(
            DeviceRecord(ell, g.xi1, g.xi2, yt, yh, jl, **extra)
            for ell, (g, yt, yh, jl, extra)
            in enumerate(zip(gammas, y_true, y_hat, leader_values, per_device)))
        records.append(IterationRecord(it, devices, aggregate, float(sum(leader_values)),
                                       tuple(flags)))

    if records:
        last = records[-1]
        records[-1] = IterationRecord(last.iter, last.devices, last.aggregate_y,
                                      last.leader_objective, last.flags, stop_reason)
    return records


def run_aggregate(scenario: Scenario) -> List[IterationRecord]:
    """Aggregate-signal game: one household, responses observed exactly."""
    if scenario.n_devices != 1:
        raise ConfigurationError(
            f"aggregate run needs exactly one device, got {scenario.n_devices}")
    return simulate(scenario, disaggregation=False)


def run_device_level(scenario: Scenario) -> List[IterationRecord]:
    """Device-level game; per-device usage comes from the bounded-error
    disaggregation oracle (exact when ``epsilon == 0``)."""
    return simulate(scenario, disaggregation=True)


def terminated_early(records: Sequence[IterationRecord]) -> bool:
    return bool(records) and records[-1].stop_reason != MAX_ITERS_REACHED
