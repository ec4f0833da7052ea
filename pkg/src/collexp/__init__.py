"""Equilibria, large-N limits and Monte Carlo checks for collective
experimentation under a qualified-majority rule with correlated payoffs."""

from .model import (
    BeliefPoint,
    DegenerateEvent,
    ModelError,
    ModelParams,
    QuorumRule,
    State,
    ValidationError,
    Violation,
    belief_point,
    log_posterior_odds,
    p_good_given_state,
    p_good_given_winners,
    p_state_H,
    validate_params,
)
from .equilibrium import CutoffSolution, NoInteriorEquilibrium, NonConvergence, indifference_rhs, solve_cutoff
from .asymptotics import (
    Aggregation,
    AsymptoticProfile,
    DomainError,
    aggregation_threshold,
    asymptotic_profile,
    classify_aggregation,
    k_bar,
    k_hat,
    limit_cutoff,
    limit_cutoff_interior,
    myopic_cutoff,
    prob_no_winner,
    undominated_sincerity_cutoff,
    winner_fraction_limit,
)

__version__ = "0.1.0"
