"""Utility learning from (incentive, response) observations.

Two fitting routes recover the polynomial satisfaction estimate:

* :func:`minimal_order_fit` uses the stationarity condition of the
  consumer payoff at each observed response and looks for the lowest order
  whose stacked linear system is consistent. It needs every response
  strictly inside the decision set.
* :func:`kkt_fit` minimises the squared stationarity and complementarity
  residuals over the coefficients and nonnegative multipliers for the two
  bound constraints, so boundary responses are handled too.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import ConfigurationError, GameParams, QuadraticIncentive, SatisfactionPoly

DEFAULT_FIT_TOL = 1e-8
# singular values below RANK_RTOL * s_max count as zero for the rank check
RANK_RTOL = 1e-12


class FitMethod(enum.Enum):
    RANGE_TEST = "range_test"
    KKT_RESIDUAL = "kkt_residual"


class NonInteriorObservation(ConfigurationError):
    """A response sits on the boundary; use :func:`kkt_fit` instead."""


@dataclass(frozen=True)
class Observation:
    xi1: float
    xi2: float
    y: float

    @property
    def incentive(self) -> QuadraticIncentive:
        return QuadraticIncentive(self.xi1, self.xi2)


@dataclass(frozen=True)
class ObservationHistory:
    records: tuple
    params: GameParams

    def __post_init__(self):
        records = tuple(
            r if isinstance(r, Observation) else Observation(*r) for r in self.records)
        for r in records:
            if not (0.0 <= r.y <= self.params.ybar):
                raise ConfigurationError(
                    f"observed response {r.y} outside [0, {self.params.ybar}]")
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, gamma: QuadraticIncentive, y: float) -> "ObservationHistory":
        return ObservationHistory(self.records + (Observation(gamma.xi1, gamma.xi2, y),),
                                  self.params)

    @property
    def responses(self) -> np.ndarray:
        return np.array([r.y for r in self.records], dtype=float)

    def all_interior(self) -> bool:
        return all(0.0 < r.y < self.params.ybar for r in self.records)


@dataclass(frozen=True)
class EstimationResult:
    """Fitted coefficients plus diagnostics.

    ``residual`` is the relative misfit ``||Y a - b|| / max(||b||, 1)`` for the
    range test and the attained penalty value for the KKT route.
    """

    alpha: SatisfactionPoly
    order_j: int
    method: FitMethod
    residual: float
    accepted: bool = True
    rank: int = 0
    lambdas: Optional[np.ndarray] = None
    converged: bool = True
    iterations: int = 0
    r_ineq: float = 0.0
    trace: tuple = field(default=(), repr=False)

    @property
    def rank_deficient(self) -> bool:
        return self.rank < min(len(self.alpha.alpha), self._rows)

    _rows: int = field(default=0, repr=False)


def build_rhs(history: ObservationHistory) -> np.ndarray:
    """Entry ``i`` is ``p - xi1 - 2*xi2*y`` at the observed response."""
    if len(history) == 0:
        raise ConfigurationError("empty observation history")
    p = history.params.p
    return np.array([p - r.xi1 - 2.0 * r.xi2 * r.y for r in history.records])


def build_design_matrix(history: ObservationHistory, order_j: int) -> np.ndarray:
    """Rows ``[1, 2y, 3y^2, ..., (j+1) y^j]`` (derivative of the basis)."""
    if order_j < 1:
        raise ConfigurationError(f"order_j must be >= 1, got {order_j}")
    if len(history) == 0:
        raise ConfigurationError("empty observation history")
    y = history.responses[:, None]
    powers = np.arange(order_j + 1)
    return (powers + 1) * y ** powers


def numerical_rank(Y: np.ndarray) -> int:
    s = np.linalg.svd(Y, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _lstsq(history: ObservationHistory, j: int, b: np.ndarray):
    Y = build_design_matrix(history, j)
    alpha = np.linalg.lstsq(Y, b, rcond=None)[0]
    rel = float(np.linalg.norm(Y @ alpha - b) / max(np.linalg.norm(b), 1.0))
    return alpha, rel, numerical_rank(Y), Y.shape[0]


def minimal_order_fit(history: ObservationHistory, fit_tol: float = DEFAULT_FIT_TOL,
                      max_order: Optional[int] = None) -> EstimationResult:
    """Lowest-order polynomial whose stationarity system is consistent.

    Tries ``j = 1, 2, ...`` up to ``min(max_order, k)`` with ``k + 1``
    observations and accepts the first relative residual ``<= fit_tol``.
    Least squares gives the minimum-norm solution when the system is
    rank deficient. When nothing passes, the best-residual fit is returned
    with ``accepted=False``.
    """
    if len(history) == 0:
        raise ConfigurationError("empty observation history")
    if not history.all_interior():
        raise NonInteriorObservation(
            "range test needs strictly interior responses; use kkt_fit")
    k = len(history) - 1
    top = max(1, k if max_order is None else min(max_order, k))
    b = build_rhs(history)
    best = None
    for j in range(1, top + 1):
        alpha, rel, rank, rows = _lstsq(history, j, b)
        if rel <= fit_tol:
            return EstimationResult(SatisfactionPoly(alpha), j, FitMethod.RANGE_TEST,
                                    rel, accepted=True, rank=rank, _rows=rows)
        if best is None or rel < best[1]:
            best = (alpha, rel, rank, rows, j)
    alpha, rel, rank, rows, j = best
    return EstimationResult(SatisfactionPoly(alpha), j, FitMethod.RANGE_TEST, rel,
                            accepted=False, rank=rank, _rows=rows)


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 20000
    ftol: float = 1e-12
    gtol: float = 1e-15
    step_min: float = 1e-12
    step_max: float = 1e12


def _kkt_system(history: ObservationHistory, order_j: int):
    """Linear residual map ``r = M x - c`` over ``x = (alpha, lambda1, lambda2)``."""
    n = len(history)
    m = order_j + 1
    y = history.responses
    ybar = history.params.ybar
    Y = build_design_matrix(history, order_j)
    b = build_rhs(history)
    eye = np.eye(n)
    M = np.zeros((3 * n, m + 2 * n))
    # stationarity: Y a - b - lam1 + lam2
    M[:n, :m] = Y
    M[:n, m:m + n] = -eye
    M[:n, m + n:] = eye
    # complementarity: lam1 * g1 and lam2 * g2 with g1 = -y, g2 = y - ybar
    M[n:2 * n, m:m + n] = np.diag(-y)
    M[2 * n:, m + n:] = np.diag(y - ybar)
    c = np.concatenate([b, np.zeros(2 * n)])
    return M, c


def _spg(M, c, lower, upper, cfg: SolverConfig):
    """Monotone spectral projected gradient for ``min ||M x - c||^2`` on a box.

    The trial point comes from a Barzilai-Borwein step followed by projection;
    the objective is quadratic, so the step along the resulting feasible
    direction is taken exactly (clipped to the segment). Variables are
    column-scaled; the box maps to a box under the diagonal scaling.
    """
    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0] = 1.0
    Ms = M / scale
    lo = lower * scale
    hi = upper * scale

    def residual(z):
        return Ms @ z - c

    z = np.clip(np.zeros(M.shape[1]), lo, hi)
    r = residual(z)
    phi = float(r @ r)
    g = 2.0 * (Ms.T @ r)
    trace = [phi]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        d = np.clip(z - step * g, lo, hi) - z
        if phi == 0.0 or np.linalg.norm(d) <= cfg.gtol * max(1.0, np.linalg.norm(z)):
            converged = True
            break
        Md = Ms @ d
        curv = float(Md @ Md)
        slope = float(g @ d)
        if curv <= 0.0 or slope >= 0.0:
            converged = True
            break
        t = min(1.0, -slope / (2.0 * curv))
        z_new = z + t * d
        r_new = r + t * Md
        phi_new = float(r_new @ r_new)
        if phi_new > phi:
            converged = True  # rounding floor
            break
        g_new = 2.0 * (Ms.T @ r_new)
        s_vec = z_new - z
        y_vec = g_new - g
        decrease = phi - phi_new
        z, r, g, phi = z_new, r_new, g_new, phi_new
        trace.append(phi)
        sy = float(s_vec @ y_vec)
        step = min(max(float(s_vec @ s_vec) / sy, cfg.step_min), cfg.step_max) if sy > 0 else cfg.step_max
        if decrease <= cfg.ftol * trace[-2]:
            converged = True
            break
    return z / scale, phi, converged, it, tuple(trace)


def kkt_fit(history: ObservationHistory, order_j: int,
            lower: Optional[Sequence[float]] = None,
            upper: Optional[Sequence[float]] = None,
            solver: SolverConfig = SolverConfig()) -> EstimationResult:
    """Approximate-optimality fit via squared KKT residuals.

    Minimises ``sum_i r_stat_i^2 + r_comp1_i^2 + r_comp2_i^2`` over the
    coefficient box ``[lower, upper]`` (unbounded by default) and
    ``lambda >= 0``, starting from zero.
    """
    if len(history) == 0:
        raise ConfigurationError("empty observation history")
    if order_j < 1:
        raise ConfigurationError(f"order_j must be >= 1, got {order_j}")
    n = len(history)
    m = order_j + 1
    lo_a = np.full(m, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi_a = np.full(m, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if lo_a.shape != (m,) or hi_a.shape != (m,) or np.any(lo_a > hi_a):
        raise ConfigurationError("coefficient box does not match order_j")
    M, c = _kkt_system(history, order_j)
    lower_all = np.concatenate([lo_a, np.zeros(2 * n)])
    upper_all = np.concatenate([hi_a, np.full(2 * n, np.inf)])
    transform = np.eye(m + 2 * n)
    if np.all(np.isinf(lo_a)) and np.all(np.isinf(hi_a)):
        # Unconstrained coefficients: whiten their block so the projected
        # gradient sees a well-conditioned problem. The feasible set is unchanged.
        _, s, vt = np.linalg.svd(M[:n, :m], full_matrices=True)
        inv = np.ones(m)
        keep = s > RANK_RTOL * (s[0] if s.size else 1.0)
        inv[: s.size][keep] = 1.0 / s[keep]
        transform[:m, :m] = vt.T * inv
    z, phi, converged, iters, trace = _spg(M @ transform, c, lower_all, upper_all, solver)
    x = transform @ z
    alpha = x[:m]
    lambdas = x[m:].reshape(2, n).T.copy()
    y = history.responses
    ybar = history.params.ybar
    r_ineq = float(np.sum(np.maximum(-y, 0.0)) + np.sum(np.maximum(y - ybar, 0.0)))
    rank = numerical_rank(build_design_matrix(history, order_j))
    return EstimationResult(SatisfactionPoly(alpha), order_j, FitMethod.KKT_RESIDUAL,
                            float(phi), accepted=converged, rank=rank, lambdas=lambdas,
                            converged=converged, iterations=iters, r_ineq=r_ineq,
                            trace=trace, _rows=n)
