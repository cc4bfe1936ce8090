"""rulefuse: learn optimal definite (Datalog) programs from examples by
generating small non-separable programs, testing them, and combining
the promising ones with an exact lexicographic optimizer."""

from .bias import BiasError, BiasSpec, candidate_literals, parse_bias
from .combine import (
    CombineResult,
    CombineStatus,
    PromisingPool,
    emit_asp_encoding,
    solve_combine,
)
from .engine import (
    LearnConfig,
    LearnResult,
    Mode,
    learn,
    learn_baseline,
    learn_combo,
    outcome_to_constraints,
)
from .evaluate import (
    Completeness,
    CoverageRecord,
    EvalBudget,
    EvaluationBudgetExceeded,
    ExampleSet,
    KnowledgeBase,
    TaskError,
    coverage,
    least_model,
)
from .generate import ConstraintKind, ConstraintStore, Generator
from .logic import (
    Const,
    Hypothesis,
    Literal,
    Rule,
    Var,
    canonical_rule,
    is_separable,
    program_cost,
    render_program,
    render_rule,
    subsumes_clause,
    subsumes_theory,
)
from .oracle import OracleResult, OracleTooLarge, brute_force_optimal

__version__ = "0.1.0"
