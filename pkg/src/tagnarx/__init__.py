"""Structure and parameter identification of polynomial input-output models
by grammar-guided genetic programming.

Model structures are encoded as derivation trees of a tree adjoining grammar;
a multi-objective search loop evolves them against one-step-ahead prediction
error, free-run simulation error, and parameter count, with least squares
fitting the coefficients of every candidate.
"""

__version__ = "0.1.0"

from .data import Dataset, SplitSpec, gaussian_input, load_csv, multisine_input, split, synthesize
from .evolution import GpConfig, IterationStats, crossover, mutate, run
from .expressions import (
    Factor,
    NarxExpression,
    Term,
    format_expression,
    format_structure,
    parse_structure,
    parse_yield,
)
from .grammar import (
    ADD_DELAY,
    ADD_INPUT_TERM,
    ADD_OUTPUT_TERM,
    ARX_SUBSET,
    DerivationNode,
    DerivationTree,
    FIR_SUBSET,
    MUL_INPUT_FACTOR,
    MUL_OUTPUT_FACTOR,
    NOISE_SEED,
    derivation_for,
    derivation_violations,
    derived_tree,
    enumerate_derivations,
    expression_of,
    g_narx,
    is_valid_derivation,
    random_derivation,
    restrict,
)
from .model import (
    NarxModel,
    SignalSeries,
    estimate_ls,
    max_lag,
    predict_one_step,
    regressor_matrix,
    rms,
    simulate,
)
from .moo import (
    Individual,
    ParetoFront,
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    select,
)
from .objectives import FitnessVector, complexity, evaluate
from .trees import (
    ElementaryTree,
    Grammar,
    GornAddress,
    Symbol,
    SyntacticTree,
    adjoin,
    grammar_from_json,
    grammar_to_json,
    is_saturated,
    nonterminal,
    resolve,
    substitute,
    terminal,
    validate_grammar,
    yield_names,
    yield_of,
)

__all__ = [
    "__version__",
    # trees
    "Symbol",
    "SyntacticTree",
    "ElementaryTree",
    "Grammar",
    "GornAddress",
    "terminal",
    "nonterminal",
    "resolve",
    "substitute",
    "adjoin",
    "yield_of",
    "yield_names",
    "is_saturated",
    "validate_grammar",
    "grammar_to_json",
    "grammar_from_json",
    # grammar
    "g_narx",
    "restrict",
    "DerivationNode",
    "DerivationTree",
    "derived_tree",
    "expression_of",
    "random_derivation",
    "enumerate_derivations",
    "derivation_for",
    "derivation_violations",
    "is_valid_derivation",
    "NOISE_SEED",
    "ADD_INPUT_TERM",
    "ADD_OUTPUT_TERM",
    "MUL_INPUT_FACTOR",
    "MUL_OUTPUT_FACTOR",
    "ADD_DELAY",
    "FIR_SUBSET",
    "ARX_SUBSET",
    # expressions
    "Factor",
    "Term",
    "NarxExpression",
    "parse_yield",
    "parse_structure",
    "format_structure",
    "format_expression",
    # model
    "NarxModel",
    "SignalSeries",
    "max_lag",
    "regressor_matrix",
    "estimate_ls",
    "predict_one_step",
    "simulate",
    "rms",
    # objectives
    "FitnessVector",
    "complexity",
    "evaluate",
    # moo
    "Individual",
    "ParetoFront",
    "dominates",
    "fast_non_dominated_sort",
    "crowding_distance",
    "select",
    # evolution
    "GpConfig",
    "IterationStats",
    "crossover",
    "mutate",
    "run",
    # data
    "Dataset",
    "SplitSpec",
    "load_csv",
    "split",
    "synthesize",
    "gaussian_input",
    "multisine_input",
]
