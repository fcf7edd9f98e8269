"""Strategic publishers game: ranking rules, better-response dynamics, welfare and checks."""

from .dynamics import (
    DynamicsConfig,
    SimulationTrace,
    non_optimal_publishers,
    restricted_best_response,
    run_dynamic,
    utility_gradient,
)
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    SearchBudgetError,
    UnsupportedConfigurationError,
)
from .experiments import ExperimentConfig, bootstrap_ci, reproduce_figures, run_cell, sample_game
from .model import (
    ABS1D,
    SQEUCLIDEAN,
    DistanceSpec,
    PublishersGame,
    StrategyProfile,
    WelfareReport,
    distance,
    relative_relevance,
    utility,
    welfare,
)
from .ranking import (
    RankingDistribution,
    RankingSpec,
    linear_rrp_rank,
    max_valid_slope,
    prp_rank,
    random_rank,
    rank,
    softmax_rrp_rank,
)
from .verification import check_potential_identity, diec_ratio, exact_potential, grid_pne_search

__version__ = "0.1.0"
