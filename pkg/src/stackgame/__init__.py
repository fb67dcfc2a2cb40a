"""Incentive design and utility learning for a utility/consumer game.

The utility company (leader) announces quadratic incentives, observes the
household's (follower's) consumption, fits a polynomial satisfaction
function from first-order optimality conditions, and redesigns the
incentive so that the household's best response lands on the leader's
preferred operating point. Device-level play uses a bounded-error
disaggregation oracle.
"""

from .config import bundled_scenario, load_scenario, parse_scenario, render_scenario
from .engine import (
    Device,
    DeviceRecord,
    IterationRecord,
    Scenario,
    disaggregate,
    run_aggregate,
    run_device_level,
    terminated_early,
)
from .estimator import (
    EstimationResult,
    FitMethod,
    ObservationHistory,
    build_design_matrix,
    build_rhs,
    kkt_fit,
    minimal_order_fit,
)
from .follower import BestResponse, Boundary, best_response, device_best_responses
from .leader import DesiredPoint, IncentiveDesign, design_incentive, desired_point
from .model import (
    ConfigurationError,
    DemandResponse,
    GameParams,
    InvalidScenarioError,
    LogSatisfaction,
    QuadraticIncentive,
    RevenueDecoupling,
    SatisfactionPoly,
    StackgameError,
    TerminationError,
    eval_follower_objective,
    eval_leader_objective,
    eval_satisfaction,
)
from .output import emit_records

__version__ = "0.1.0"
