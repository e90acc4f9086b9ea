"""Threshold cascades (bootstrap percolation with random thresholds and weights) on random graphs."""
from .errors import (
    BranchBoundaryError,
    BudgetExceeded,
    DegenerateRegimeError,
    NoTransitionError,
    OutOfRegimeError,
    ValidationError,
)
from .influence import (
    ActivationProfile,
    DiscreteDistribution,
    InfluenceSpec,
    activation_profile,
    parse_distribution,
    pi_asymptotic,
    pi_exact,
)

__version__ = "0.1.0"
