"""Anytime verification of small classifiers via game search over grid manipulations."""

__version__ = "0.1.0"

from .alphabeta import AlphaBetaSearch, alphabeta_run, minimax_reference
from .astar import AstarSearch, admissible_heuristic, astar_run, estimate
from .errors import (
    ConfigError,
    InputError,
    NonterminationError,
    NumericError,
    OracleTooLargeError,
)
from .features import FeaturePartition, block_partition, partition_to_csv, saliency_partition
from .game import (
    COMPETITIVE,
    COOPERATIVE,
    ExceedsBudget,
    GameConfig,
    GameInstance,
    GameState,
    evaluate_profile,
    format_bound,
    is_adversarial,
    is_terminal,
    player1_moves,
    player2_moves,
)
from .manipulation import (
    AtomicManipulation,
    ManipulationState,
    apply,
    apply_set,
    is_in_budget,
    is_noop,
)
from .mcts import MctsSearch, mcts_run, ucb_weight
from .metrics import (
    L0,
    L1,
    L2,
    LINF,
    Metric,
    distance,
    grid_cell_radius,
    in_neighborhood,
)
from .nn import (
    Conv2D,
    Dense,
    Flatten,
    LipschitzConstants,
    MaxPool,
    Network,
    ReLU,
    Softmax,
    classify,
    confidence_margin,
    forward,
    forward_batch,
    lipschitz_violation,
    load_model,
    net_from_json,
    net_to_json,
    save_model,
)
from .report import BoundReport, TerminationRule, TraceEntry, Verdict
from .verify import GridCheckResult, check_grid_condition, iter_grid_points, run_fr, run_msr

__all__ = [name for name in dir() if not name.startswith("_")]
