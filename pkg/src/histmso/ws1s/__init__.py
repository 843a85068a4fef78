"""A small decision procedure for monadic second-order logic over finite words."""

from . import formula
from .automaton import Automaton, EngineCapError, dump, isomorphic, minimize, shortest_accepted
from .compile import Engine, Result, accepts, compile_formula, is_satisfiable

__all__ = [
    "Automaton",
    "Engine",
    "EngineCapError",
    "Result",
    "accepts",
    "compile_formula",
    "dump",
    "formula",
    "is_satisfiable",
    "isomorphic",
    "minimize",
    "shortest_accepted",
]
