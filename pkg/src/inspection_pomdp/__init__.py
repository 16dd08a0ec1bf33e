"""Inspection timing for facilities whose quality is only partially observed."""
from .errors import (
    AlphaUndefinedError,
    CapError,
    CategoryError,
    ConfigError,
    DegenerateUpdateError,
    DivergenceError,
    InspectionModelError,
    NoEarlierPeriodError,
    PenaltyError,
    PlanDomainError,
    SimulationCapError,
)
from .markov_core import (
    Belief,
    PenaltyParams,
    TransitionModel,
    belief_trajectory,
    check_assumptions,
    hitting_times,
    observation_probs,
    update_belief_nr,
    validate_model,
)
from .planner import optimal_inspection_time, plan_value_profile, stop_condition
from .sensitivity import d_range_sweep, earlier_shift_inequality, target_time_region
from .simulator import InspectionRule, SimConfig, etd_recommendations, perturb_matrix, run_experiment
from .value_engine import ConditionalPlan, path_coefficients, value_of_plan

__version__ = "0.1.0"
