"""Construction and exact verification of secure equilibria in turn-based
games on finite graphs."""

from .arena import (
    Arena,
    CappedHitting,
    Discounted,
    FiniteHorizon,
    FiniteMemoryStrategy,
    Lasso,
    ReachedSet,
    Scalar,
    StrategyProfile,
    ValidationReport,
    default_cap,
    evaluate_payoff_on_lasso,
    expected_payoffs,
    induced_lasso,
    positional_strategy,
    product_arena,
    table_strategy,
    validate_arena,
    validate_payoffs,
)
from .construct import (
    SecureConstruction,
    WeightedMinimumPlan,
    assemble_secure_profile,
    build_label_automaton,
    clocked_expansion,
    construct_secure_equilibrium,
    minimize_sum_profile,
)
from .eliminate import EliminationLevel, EliminationTrace, eliminate_fixpoint
from .gamefile import (
    DocumentError,
    GameDocument,
    normalize_document,
    parse_document,
    serialize_document,
)
from .generate import GeneratorConfig, generate_document, generate_game
from .transform import (
    DeltaConstruction,
    DeltaParams,
    TransformedPayoffs,
    compute_delta,
    construct_nash_in_Gdelta,
    construct_secure_equilibrium_det,
    payoff_range,
    transform_payoffs,
    transform_vector,
)
from .verify import (
    BoundsExceededError,
    CheckResult,
    EquilibriumReport,
    OracleEntry,
    OracleResult,
    UnsupportedCheckError,
    Violation,
    best_response,
    check_nash,
    check_secure,
    check_strongly_secure,
    check_sum_secure,
    lexi_best_response,
    oracle_enumerate,
    project_to_tree_table,
    verify_profile,
)
from .zerosum import (
    OutcomeObjective,
    OutcomeSolution,
    OutcomeStructure,
    ZeroSumSolution,
    solve_discounted,
    solve_outcome_game,
    solve_reached_set,
    solve_total_dag,
)

__all__ = [
    "Arena",
    "BoundsExceededError",
    "CappedHitting",
    "CheckResult",
    "DeltaConstruction",
    "DeltaParams",
    "Discounted",
    "DocumentError",
    "EliminationLevel",
    "EliminationTrace",
    "EquilibriumReport",
    "FiniteHorizon",
    "FiniteMemoryStrategy",
    "GameDocument",
    "GeneratorConfig",
    "Lasso",
    "OracleEntry",
    "OracleResult",
    "OutcomeObjective",
    "OutcomeSolution",
    "OutcomeStructure",
    "ReachedSet",
    "Scalar",
    "SecureConstruction",
    "StrategyProfile",
    "TransformedPayoffs",
    "UnsupportedCheckError",
    "ValidationReport",
    "Violation",
    "WeightedMinimumPlan",
    "ZeroSumSolution",
    "assemble_secure_profile",
    "best_response",
    "build_label_automaton",
    "check_nash",
    "check_secure",
    "check_strongly_secure",
    "check_sum_secure",
    "clocked_expansion",
    "compute_delta",
    "construct_nash_in_Gdelta",
    "construct_secure_equilibrium",
    "construct_secure_equilibrium_det",
    "default_cap",
    "eliminate_fixpoint",
    "evaluate_payoff_on_lasso",
    "expected_payoffs",
    "generate_document",
    "generate_game",
    "induced_lasso",
    "lexi_best_response",
    "minimize_sum_profile",
    "normalize_document",
    "oracle_enumerate",
    "parse_document",
    "payoff_range",
    "positional_strategy",
    "product_arena",
    "project_to_tree_table",
    "serialize_document",
    "solve_discounted",
    "solve_outcome_game",
    "solve_reached_set",
    "solve_total_dag",
    "table_strategy",
    "transform_payoffs",
    "transform_vector",
    "validate_arena",
    "validate_payoffs",
    "verify_profile",
]

__version__ = "0.1.0"
