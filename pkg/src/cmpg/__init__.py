"""Solver toolkit for ergodic, sure-ergodic and almost-sure-ergodic
concurrent mean-payoff games: classification, value iteration, q-rounded
strategy iteration, hard-instance generators and exact-value sentences in
the existential theory of the reals."""

__version__ = "0.1.0"

from .classify import Classification, classify, ergodic_components, existential_graph, guaranteed_reach
from .errors import CmpgError
from .game import (
    Game,
    GameStats,
    StationaryStrategy,
    compute_stats,
    expected_reward,
    parse_game,
    parse_strategy,
    patience,
    serialize_game,
    serialize_strategy,
)
from .generators import (
    SSG,
    SkewSymmetryWitness,
    check_skew_symmetric,
    gen_lower_bound,
    gen_sqrt_game,
    gen_sqrt_sum,
    kwek_mehlhorn,
    reduce_ssg,
)
from .matrix import (
    MatrixGame,
    QRoundedDistribution,
    best_q_rounded,
    q_from_epsilon,
    round_distribution,
    solve_matrix_game,
)
from .response import PotentialSolution, best_response_potentials, solve_gain_bias
from .solvers import (
    HittingBound,
    StrategyIterationResult,
    ValueIterationResult,
    evaluate_profile,
    hitting_bound,
    hitting_time,
    value_iteration,
    var_hoffman_karp,
    vi_steps_for_epsilon,
)
from .etr import EtrSentence, check_assignment, emit_etr_component, emit_etr_full

__all__ = [
    "CmpgError",
    "Classification",
    "EtrSentence",
    "Game",
    "GameStats",
    "HittingBound",
    "MatrixGame",
    "PotentialSolution",
    "QRoundedDistribution",
    "SSG",
    "SkewSymmetryWitness",
    "StationaryStrategy",
    "StrategyIterationResult",
    "ValueIterationResult",
    "best_q_rounded",
    "best_response_potentials",
    "check_assignment",
    "check_skew_symmetric",
    "classify",
    "compute_stats",
    "emit_etr_component",
    "emit_etr_full",
    "ergodic_components",
    "evaluate_profile",
    "existential_graph",
    "expected_reward",
    "gen_lower_bound",
    "gen_sqrt_game",
    "gen_sqrt_sum",
    "guaranteed_reach",
    "hitting_bound",
    "hitting_time",
    "kwek_mehlhorn",
    "parse_game",
    "parse_strategy",
    "patience",
    "q_from_epsilon",
    "reduce_ssg",
    "round_distribution",
    "serialize_game",
    "serialize_strategy",
    "solve_gain_bias",
    "solve_matrix_game",
    "value_iteration",
    "var_hoffman_karp",
    "vi_steps_for_epsilon",
]
