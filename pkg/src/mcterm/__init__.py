"""Termination analysis and ranking-function synthesis for monotonicity
constraint systems."""

__version__ = "0.1.0"

from .model import (
    Arc,
    ConfigurationError,
    ConstraintSystem,
    Diagnostic,
    EndpointMismatchError,
    Invariant,
    MonotonicityConstraint,
    ResourceBudgetError,
    VarTerm,
    Verdict,
    Witness,
    validate_system,
)
from .closure import close, collapse, compose, entails, subsumes
from .decider import (
    ClosureOptions,
    ClosureSet,
    closure_set,
    decide_closure,
    is_idempotent,
    local_termination_test,
    sagiv_test,
)
from .elaborate import (
    ElaboratedSystem,
    Ordering,
    enumerate_orderings,
    fully_elaborate,
    has_downward_closure,
    is_fully_elaborated,
    is_stable,
    ordered_bell,
    stabilize,
)
from .ranking import (
    Guard,
    RankRow,
    RankVector,
    RankingFailure,
    RankingFunction,
    ThreadPreserver,
    build_ranking,
    compute_mtp,
    decide_elaborate,
    format_ranking,
    parse_ranking,
    translate_ranking,
)
from .oracle import (
    ltt_bruteforce,
    random_system,
    satisfiable_power,
    verify_ranking_numeric,
    verify_ranking_symbolic,
)
from .dsl import ParseError, SourceSpan, format_system, parse_system

__all__ = [
    "Arc",
    "ClosureOptions",
    "ClosureSet",
    "ConfigurationError",
    "ConstraintSystem",
    "Diagnostic",
    "ElaboratedSystem",
    "EndpointMismatchError",
    "Guard",
    "Invariant",
    "MonotonicityConstraint",
    "Ordering",
    "ParseError",
    "RankRow",
    "RankVector",
    "RankingFailure",
    "RankingFunction",
    "ResourceBudgetError",
    "SourceSpan",
    "ThreadPreserver",
    "VarTerm",
    "Verdict",
    "Witness",
    "build_ranking",
    "close",
    "closure_set",
    "collapse",
    "compose",
    "compute_mtp",
    "decide_closure",
    "decide_elaborate",
    "enumerate_orderings",
    "entails",
    "format_ranking",
    "format_system",
    "fully_elaborate",
    "has_downward_closure",
    "is_fully_elaborated",
    "is_idempotent",
    "is_stable",
    "local_termination_test",
    "ltt_bruteforce",
    "ordered_bell",
    "parse_ranking",
    "parse_system",
    "random_system",
    "sagiv_test",
    "satisfiable_power",
    "stabilize",
    "subsumes",
    "translate_ranking",
    "validate_system",
    "verify_ranking_numeric",
    "verify_ranking_symbolic",
]
