"""Compile word formulas to minimal automata and decide them.

Semantics: a word of length n has positions 0..n-1 (the empty word is
allowed). Position variables carry exactly one 1 on their track, set variables
any subset. Every intermediate automaton rejects words in which one of its free position
variables is not a singleton, which keeps the automata small.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import formula as F
from .automaton import (
    DEFAULT_STATE_CAP,
    Automaton,
    complement,
    constant,
    from_rule,
    minimize,
    product,
    project,
    shortest_accepted,
    word_automaton,
)
from .mtbdd import Manager

# Atom automata as (number of states, accepting states, rule). The rule maps a
# state and the bits of the atom's arguments to the next state.


def _lt(s, b):
    x, y = b
    if s == 0:
        return 3 if y else (1 if x else 0)
    if s == 1:
        return 2 if y else 1
    return s


def _eq(s, b):
    x, y = b
    if s == 0:
        return 1 if (x and y) else (2 if (x or y) else 0)
    return s


def _succ(s, b):
    x, y = b
    if s == 0:
        return 3 if y else (1 if x else 0)
    if s == 1:
        return 2 if y else 3
    return s


def _first(s, b):
    return (1 if b[0] else 2) if s == 0 else s


def _last(s, b):
    return 1 if b[0] else 0


def _in(s, b):
    x, X = b
    if s == 0:
        return (1 if X else 2) if x else 0
    return s


def _sub(s, b):
    X, Y = b
    return 1 if (s == 1 or (X and not Y)) else 0


def _empty(s, b):
    return 1 if (s == 1 or b[0]) else 0


def _sing(s, b):
    if s == 0:
        return 1 if b[0] else 0
    if s == 1:
        return 2 if b[0] else 1
    return 2


_ATOM_RULES = {
    "lt": (4, {2}, _lt),
    "eq": (3, {1}, _eq),
    "succ": (4, {2}, _succ),
    "first": (3, {1}, _first),
    "last": (2, {1}, _last),
    "in": (3, {1}, _in),
    "sub": (2, {0}, _sub),
    "empty": (2, {0}, _empty),
    "sing": (3, {1}, _sing),
}


@dataclass
class Result:
    satisfiable: bool
    witness: Optional[list] = None  # letters over ``tracks``
    tracks: tuple = ()
    states: int = 0


class Engine:
    """Compiles word formulas over a shared decision-diagram manager.

    ``tracks`` fixes the first levels of the diagram (typically the encoding
    lanes); any other variable gets a level on first use. Compiled
    subformulas are cached, so repeated work across related queries is shared.

    ``domain`` is an optional formula over the fixed tracks (no free position
    variables) or a ready automaton over them. When given, it is conjoined before
    every projection, so compiled automata are exact only on words of the
    domain; satisfiability queries are then relative to the domain. This keeps
    subset constructions from exploring words that can never occur.
    """

    def __init__(self, tracks: Sequence[str] = (), state_cap: int = DEFAULT_STATE_CAP,
                 domain: Optional[F.WordFormula] = None):
        self.mgr = Manager()
        self.level: dict = {}
        self.state_cap = state_cap
        self._cache: dict = {}
        self._atom_cache: dict = {}
        self._restrict_cache: dict = {}
        for t in tracks:
            self.level_of(t)
        self.domain = None
        if isinstance(domain, Automaton):
            self.domain = domain
        elif domain is not None:
            fo, _ = F.free_vars(domain)
            if fo:
                raise F.WordFormulaError("the domain formula must not have free position variables")
            self.domain = self.compile_raw(domain)

    @classmethod
    def for_word(cls, tracks: Sequence[str], word: Sequence, state_cap: int = DEFAULT_STATE_CAP) -> "Engine":
        """Engine whose domain is the single word over ``tracks``: deciding
        membership of that word without building full-language automata."""
        eng = cls(tracks, state_cap)
        eng.domain = word_automaton(eng.mgr, [eng.level[t] for t in tracks], word)
        return eng

    def level_of(self, name: str) -> int:
        lvl = self.level.get(name)
        if lvl is None:
            lvl = self.level[name] = len(self.level)
        return lvl

    # atoms ----------------------------------------------------------------

    def atom(self, kind: str, args: tuple) -> Automaton:
        key = (kind, args)
        a = self._atom_cache.get(key)
        if a is None:
            n, acc, rule = _ATOM_RULES[kind]
            levels = [self.level_of(v) for v in args]
            a = from_rule(self.mgr, levels, n, rule, acc)
            self._atom_cache[key] = a
        return a

    def singleton(self, x: str) -> Automaton:
        return self.atom("sing", (x,))

    def restriction(self, names) -> Automaton:
        """Words in which every variable of ``names`` is a singleton."""
        key = frozenset(names)
        a = self._restrict_cache.get(key)
        if a is None:
            a = constant(self.mgr, True)
            for x in sorted(key, key=self.level_of):
                a = minimize(product(a, self.singleton(x), "and", self.state_cap))
            self._restrict_cache[key] = a
        return a

    def restrict(self, a: Automaton, names, f=None) -> Automaton:
        if not names:
            return a
        where = self._where(f) if f is not None else ""
        return minimize(product(a, self.restriction(names), "and", self.state_cap, where))

    # recursion ------------------------------------------------------------

    @staticmethod
    def _where(f: F.WordFormula):
        def describe() -> str:
            text = F.to_text(f)
            return text if len(text) <= 160 else text[:157] + "..."

        return describe

    def _build(self, f: F.WordFormula) -> tuple:
        """(automaton, free position variables); the automaton rejects words where
        a free position variable is not a singleton."""
        op, args = f.op, f.args
        cap = self.state_cap
        if op == "true":
            return constant(self.mgr, True), frozenset()
        if op == "false":
            return constant(self.mgr, False), frozenset()
        if op in F.ATOMS:
            fo = frozenset(v for v, k in zip(args, F.ATOMS[op]) if k == 1)
            return self.restrict(self.atom(op, args), fo), fo
        if op == "not":
            a, fo = self._get(args[0])
            return self.restrict(complement(a), fo, f), fo
        if op in ("and", "or"):
            parts = [self._get(g) for g in args]
            fo = frozenset().union(*(p[1] for p in parts))
            if op == "or":
                parts = [(self.restrict(a, fo - v, f), v) for a, v in parts]
            autos = sorted((a for a, _ in parts), key=lambda a: a.num_states)
            acc = autos[0]
            for nxt in autos[1:]:
                acc = minimize(product(acc, nxt, op, cap, self._where(f)))
            return acc, fo
        if op == "iff":
            (a, va), (b, vb) = self._get(args[0]), self._get(args[1])
            fo = va | vb
            return self.restrict(minimize(product(a, b, "iff", cap, self._where(f))), fo, f), fo
        if op in ("ex1", "all1", "ex2", "all2"):
            x, body = args
            inner, fo_body = self._get(body)
            first_order = op in ("ex1", "all1")
            universal = op in ("all1", "all2")
            if universal:
                inner = self.restrict(complement(inner), fo_body, f)
            if first_order and x not in fo_body:
                inner = self.restrict(inner, {x}, f)
            if self.domain is not None:
                inner = minimize(product(inner, self.domain, "and", cap, self._where(f)))
            out = minimize(project(inner, self.level_of(x), cap, self._where(f)))
            fo = fo_body - {x}
            if universal:
                out = self.restrict(complement(out), fo, f)
            return out, fo
        raise F.WordFormulaError(f"unknown node {op!r}")

    def _get(self, f: F.WordFormula) -> tuple:
        r = self._cache.get(f)
        if r is None:
            r = self._cache[f] = self._build(f)
        return r

    def compile_raw(self, f: F.WordFormula) -> Automaton:
        """Automaton without track metadata."""
        return self._get(f)[0]

    def compile(self, f: F.WordFormula, var_order: Optional[Iterable[str]] = None) -> Automaton:
        """Automaton over the tracks ``var_order`` (default: free variables, lanes first)."""
        fo, so = F.free_vars(f)
        if var_order is None:
            var_order = sorted(fo | so, key=self.level_of)
        var_order = tuple(var_order)
        missing = (fo | so) - set(var_order)
        if missing:
            raise F.WordFormulaError(f"free variables {sorted(missing)} missing from the track order")
        a = self.compile_raw(f)
        for v in var_order:
            self.level_of(v)
        return a.with_tracks(var_order, self.level)

    def is_satisfiable(self, f: F.WordFormula, var_order: Optional[Iterable[str]] = None) -> Result:
        a = self.compile(f, var_order)
        if self.domain is not None:
            a = minimize(product(a, self.domain, "and", self.state_cap)).with_tracks(a.tracks, self.level)
        w = shortest_accepted(a)
        return Result(w is not None, w, a.tracks, a.num_states)

    def is_valid(self, f: F.WordFormula) -> bool:
        return not self.is_satisfiable(F.neg(f)).satisfiable

    def accepts(self, f, word: Sequence, var_order: Optional[Sequence[str]] = None) -> bool:
        """Membership of ``word`` (letters aligned with the track order) in a formula or automaton."""
        a = f if isinstance(f, Automaton) else self.compile(f, var_order)
        return a.accepts(word)

    def clear_cache(self) -> None:
        self._cache.clear()


def compile_formula(f: F.WordFormula, var_order: Optional[Iterable[str]] = None,
                    state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    return Engine((), state_cap).compile(f, var_order)


def is_satisfiable(f: F.WordFormula, state_cap: int = DEFAULT_STATE_CAP) -> Result:
    return Engine((), state_cap).is_satisfiable(f)


def accepts(a, word: Sequence, var_order: Optional[Sequence[str]] = None) -> bool:
    if isinstance(a, Automaton):
        return a.accepts(word)
    return Engine().accepts(a, word, var_order)
