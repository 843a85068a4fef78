"""Deterministic finite automata over bit-vector letters with MTBDD transitions."""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .mtbdd import LEAF, Manager

DEFAULT_STATE_CAP = int(os.environ.get("HISTMSO_STATE_CAP", 1_000_000))


class EngineCapError(RuntimeError):
    """An intermediate automaton grew past the configured state cap."""

    def __init__(self, states: int, cap: int, where=""):
        if callable(where):
            where = where()
        self.states = states
        self.cap = cap
        self.where = where
        msg = f"automaton exceeded {cap} states"
        if where:
            msg += f" while compiling {where}"
        super().__init__(msg)


@dataclass(frozen=True)
class Automaton:
    """A complete DFA.

    ``delta[s]`` is an MTBDD node whose leaves are target states. ``tracks``
    names the free variables; ``index[name]`` is the BDD level of that track.
    """

    mgr: Manager
    delta: tuple
    accepting: frozenset
    tracks: tuple = ()
    index: tuple = ()
    initial: int = 0

    @property
    def num_states(self) -> int:
        return len(self.delta)

    def with_tracks(self, tracks: Sequence[str], index: dict) -> "Automaton":
        return Automaton(self.mgr, self.delta, self.accepting, tuple(tracks),
                         tuple(index[t] for t in tracks), self.initial)

    def levels(self) -> dict:
        return dict(zip(self.tracks, self.index))

    def step(self, state: int, letter: dict) -> int:
        return self.mgr.evaluate(self.delta[state], letter)

    def run(self, word: Iterable) -> int:
        """Final state after reading ``word``; letters are sequences aligned with ``tracks``."""
        s = self.initial
        for letter in word:
            if len(letter) != len(self.tracks):
                raise ValueError(f"letter width {len(letter)} does not match {len(self.tracks)} tracks")
            s = self.step(s, {lvl: b for lvl, b in zip(self.index, letter) if b})
        return s

    def accepts(self, word: Iterable) -> bool:
        return self.run(word) in self.accepting

    def successors(self, state: int) -> list:
        return self.mgr.leaves(self.delta[state])


def _canonical(mgr: Manager, delta: Sequence[int], accepting, initial: int) -> tuple:
    """Keep reachable states, numbered in breadth-first order from the initial state."""
    order = {initial: 0}
    queue = [initial]
    i = 0
    while i < len(queue):
        s = queue[i]
        i += 1
        for t in mgr.leaves(delta[s]):
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    memo: dict = {}
    leaf = mgr.leaf
    new_delta = tuple(mgr.map_leaves(delta[s], lambda t: leaf(order[t]), memo) for s in queue)
    acc = frozenset(order[s] for s in queue if s in accepting)
    return new_delta, acc


def constant(mgr: Manager, value: bool) -> Automaton:
    return Automaton(mgr, (mgr.leaf(0),), frozenset([0]) if value else frozenset())


def from_rule(mgr: Manager, levels: Sequence[int], nstates: int, rule, accepting) -> Automaton:
    """Automaton whose transition from state s on bits of ``levels`` is ``rule(s, bits)``."""
    delta = tuple(mgr.from_function(list(levels), lambda bits, s=s: rule(s, bits)) for s in range(nstates))
    return minimize(Automaton(mgr, delta, frozenset(accepting)))


def word_automaton(mgr: Manager, levels: Sequence[int], word: Sequence[Sequence[int]]) -> Automaton:
    """Minimal automaton accepting exactly ``word`` (letters aligned with ``levels``)."""
    n = len(word)
    sink = n + 1
    order = sorted(range(len(levels)), key=lambda i: levels[i])
    delta = []
    for i in range(n):
        u = mgr.leaf(i + 1)
        for idx in reversed(order):
            lvl = levels[idx]
            if word[i][idx]:
                u = mgr.node(lvl, mgr.leaf(sink), u)
            else:
                u = mgr.node(lvl, u, mgr.leaf(sink))
        delta.append(u)
    delta.append(mgr.leaf(sink))
    delta.append(mgr.leaf(sink))
    return Automaton(mgr, tuple(delta), frozenset([n]))


def complement(a: Automaton) -> Automaton:
    return Automaton(a.mgr, a.delta, frozenset(range(a.num_states)) - a.accepting,
                     a.tracks, a.index, a.initial)


def product(a: Automaton, b: Automaton, mode: str = "and", cap: int = DEFAULT_STATE_CAP, where: str = "") -> Automaton:
    """Synchronous product; ``mode`` is one of and, or, xor, implies, iff."""
    if a.mgr is not b.mgr:
        raise ValueError("automata built by different managers")
    mgr = a.mgr
    ids: dict = {}
    queue: list = []
    leaf = mgr.leaf

    def state_of(p: int, q: int) -> int:
        key = (p, q)
        s = ids.get(key)
        if s is None:
            s = len(queue)
            ids[key] = s
            queue.append(key)
            if s >= cap:
                raise EngineCapError(s + 1, cap, where)
        return s

    def combine(p, q):
        return leaf(state_of(p, q))

    state_of(a.initial, b.initial)
    memo: dict = {}
    delta = []
    i = 0
    while i < len(queue):
        p, q = queue[i]
        i += 1
        delta.append(mgr.apply(a.delta[p], b.delta[q], combine, memo))
    accA, accB = a.accepting, b.accepting
    test = {
        "and": lambda x, y: x and y,
        "or": lambda x, y: x or y,
        "xor": lambda x, y: x != y,
        "implies": lambda x, y: (not x) or y,
        "iff": lambda x, y: x == y,
    }[mode]
    acc = frozenset(s for s, (p, q) in enumerate(queue) if test(p in accA, q in accB))
    return Automaton(mgr, tuple(delta), acc)


def project(a: Automaton, level: int, cap: int = DEFAULT_STATE_CAP, where: str = "") -> Automaton:
    """Existentially quantify the track at BDD ``level`` (subset construction)."""
    mgr = a.mgr
    leaf = mgr.leaf
    union_memo: dict = {}

    def union_leaf(x, y):
        return leaf(x | y)

    def union(u: int, w: int) -> int:
        if u == w:
            return u
        if u > w:
            u, w = w, u
        return mgr.apply(u, w, union_leaf, union_memo)

    set_memo: dict = {}
    ex_memo: dict = {}
    projected = []
    for root in a.delta:
        lifted = mgr.map_leaves(root, lambda t: leaf(frozenset((t,))), set_memo)
        projected.append(mgr.exists(lifted, level, union, ex_memo))

    ids: dict = {}
    queue: list = []

    def state_of(subset: frozenset) -> int:
        s = ids.get(subset)
        if s is None:
            s = len(queue)
            ids[subset] = s
            queue.append(subset)
            if s >= cap:
                raise EngineCapError(s + 1, cap, where)
        return leaf(s)

    state_of(frozenset((a.initial,)))
    to_state_memo: dict = {}
    delta = []
    i = 0
    while i < len(queue):
        subset = queue[i]
        i += 1
        members = sorted(subset)
        u = projected[members[0]]
        for s in members[1:]:
            u = union(u, projected[s])
        delta.append(mgr.map_leaves(u, state_of, to_state_memo))
    acc = frozenset(s for s, sub in enumerate(queue) if sub & a.accepting)
    return Automaton(mgr, tuple(delta), acc)


def minimize(a: Automaton) -> Automaton:
    """Moore partition refinement followed by canonical renumbering."""
    mgr = a.mgr
    n = a.num_states
    leaf = mgr.leaf
    if not a.accepting or len(a.accepting) == n:
        cls = [0] * n
        count = 1
    else:
        cls = [1 if s in a.accepting else 0 for s in range(n)]
        count = 2
    while True:
        memo: dict = {}
        current = cls
        sigs: dict = {}
        new = []
        for s in range(n):
            t = mgr.map_leaves(a.delta[s], lambda x: leaf(current[x]), memo)
            new.append(sigs.setdefault((current[s], t), len(sigs)))
        if len(sigs) == count:
            break
        cls, count = new, len(sigs)
    reps: dict = {}
    for s in range(n):
        reps.setdefault(cls[s], s)
    memo = {}
    delta = [mgr.map_leaves(a.delta[reps[c]], lambda x: leaf(cls[x]), memo) for c in range(count)]
    acc = {cls[s] for s in a.accepting}
    delta, acc = _canonical(mgr, delta, acc, cls[a.initial])
    return Automaton(mgr, delta, acc, a.tracks, a.index, 0)


def shortest_accepted(a: Automaton) -> Optional[list]:
    """Length-lexicographically smallest accepted word as a list of letters over ``a.tracks``."""
    mgr = a.mgr
    if a.initial in a.accepting:
        return []
    parent = {a.initial: None}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        for t, cube in mgr.first_cubes(a.delta[s]):
            if t in parent:
                continue
            parent[t] = (s, cube)
            if t in a.accepting:
                return _trace(a, parent, t)
            queue.append(t)
    return None


def _trace(a: Automaton, parent: dict, t: int) -> list:
    word = []
    while parent[t] is not None:
        s, cube = parent[t]
        word.append(tuple(cube.get(lvl, 0) for lvl in a.index))
        t = s
    word.reverse()
    return word


def is_empty(a: Automaton) -> bool:
    reach = {a.initial}
    stack = [a.initial]
    while stack:
        s = stack.pop()
        if s in a.accepting:
            return False
        for t in a.successors(s):
            if t not in reach:
                reach.add(t)
                stack.append(t)
    return True


def isomorphic(a: Automaton, b: Automaton) -> bool:
    """Structural equality after minimization (the numbering is canonical)."""
    if a.num_states != b.num_states or a.accepting != b.accepting:
        return False
    return a.delta == b.delta if a.mgr is b.mgr else dump(a) == dump(b)


def dump(a: Automaton) -> str:
    """Stable text listing: one line per (state, bit pattern) with ``X`` for don't-care."""
    lines = [
        f"tracks: {' '.join(a.tracks)}",
        f"states: {a.num_states}",
        f"initial: {a.initial}",
        f"accepting: {' '.join(map(str, sorted(a.accepting)))}",
        "transitions:",
    ]
    pos = {lvl: i for i, lvl in enumerate(a.index)}
    for s in range(a.num_states):
        for cube, t in a.mgr.paths(a.delta[s]):
            pattern = ["X"] * len(a.tracks)
            for lvl, bit in cube.items():
                if lvl in pos:
                    pattern[pos[lvl]] = str(bit)
            lines.append(f"{s} {''.join(pattern) or '-'} -> {t}")
    return "\n".join(lines) + "\n"


__all__ = [
    "Automaton",
    "EngineCapError",
    "DEFAULT_STATE_CAP",
    "LEAF",
    "complement",
    "constant",
    "dump",
    "from_rule",
    "is_empty",
    "isomorphic",
    "minimize",
    "product",
    "project",
    "shortest_accepted",
    "word_automaton",
]
