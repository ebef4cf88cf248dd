"""A small answer-set programming engine for packing programs."""

from .grounder import (
    GroundingBudgetExceeded,
    GroundingError,
    GroundProgram,
    Limits,
    RecursiveAggregate,
    ground,
)
from .parser import ParseError, parse, parse_facts, parse_term
from .solver import (
    AnswerSet,
    NonIntegerWeight,
    OracleBudgetExceeded,
    check_stable,
    oracle_answer_sets,
    solve,
    solve_optimal,
)
from .syntax import Program, Rule, UnsafeRule
from .terms import (
    NIL,
    Constant,
    Function,
    NonGround,
    Ordering,
    String,
    Variable,
    compare_terms,
    make_list,
    render,
    term_key,
)

__all__ = [
    "AnswerSet",
    "Constant",
    "Function",
    "GroundProgram",
    "GroundingBudgetExceeded",
    "GroundingError",
    "Limits",
    "NIL",
    "NonGround",
    "NonIntegerWeight",
    "OracleBudgetExceeded",
    "Ordering",
    "ParseError",
    "Program",
    "RecursiveAggregate",
    "Rule",
    "String",
    "UnsafeRule",
    "Variable",
    "check_stable",
    "compare_terms",
    "ground",
    "make_list",
    "oracle_answer_sets",
    "parse",
    "parse_facts",
    "parse_term",
    "render",
    "solve",
    "solve_optimal",
    "term_key",
]
