"""Consistency models of replicated stores as monadic second-order formulas.

Histories and abstract executions can be checked directly, or encoded as
words and decided with automata; the package also builds the sparse
generator graph of returns-before and measures its cutwidth.
"""

from .encoding import BitLayout, WordModel, decode, encode, encode_exec, encode_timeline
from .evaluator import check_model, eval_formula, find_violation
from .history import (
    EMPTY,
    UNDEF,
    AbstractExecution,
    History,
    MetaParams,
    Operation,
    validate_execution,
    validate_history,
)
from .models import ModelDef, builtin_models, check_trace, implication_search
from .rbgraph import build_generator, cutwidth_along_ord, exact_cutwidth
from .syntax import format_formula, parse_formula
from .traceio import GeneratorConfig, gen_exec, gen_history, load_trace, parse_trace, serialize_trace
from .translate import TranslationContext, is_encoding, translate

__all__ = [
    "AbstractExecution",
    "BitLayout",
    "EMPTY",
    "GeneratorConfig",
    "History",
    "MetaParams",
    "ModelDef",
    "Operation",
    "TranslationContext",
    "UNDEF",
    "WordModel",
    "build_generator",
    "builtin_models",
    "check_model",
    "check_trace",
    "cutwidth_along_ord",
    "decode",
    "encode",
    "encode_exec",
    "encode_timeline",
    "eval_formula",
    "exact_cutwidth",
    "find_violation",
    "format_formula",
    "gen_exec",
    "gen_history",
    "implication_search",
    "is_encoding",
    "load_trace",
    "parse_formula",
    "parse_trace",
    "serialize_trace",
    "translate",
    "validate_execution",
    "validate_history",
]
