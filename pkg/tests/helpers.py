"""Oracles and random generators shared by the test modules."""

from __future__ import annotations

import itertools
import random

from histmso import logic as L
from histmso.history import EMPTY, READ, UNDEF, WRITE, MetaParams
from histmso.ws1s import formula as W

# brute-force semantics of word formulas ---------------------------------------


def word_holds(f: W.WordFormula, n: int, env: dict) -> bool:
    """Truth of ``f`` on a word with positions 0..n-1; ``env`` maps position
    variables to ints and set variables (tracks included) to frozensets."""
    op, args = f.op, f.args
    if op == "true":
        return True
    if op == "false":
        return False
    if op == "lt":
        return env[args[0]] < env[args[1]]
    if op == "eq":
        return env[args[0]] == env[args[1]]
    if op == "succ":
        return env[args[1]] == env[args[0]] + 1
    if op == "first":
        return env[args[0]] == 0
    if op == "last":
        return env[args[0]] == n - 1
    if op == "in":
        return env[args[0]] in env[args[1]]
    if op == "sub":
        return env[args[0]] <= env[args[1]]
    if op == "empty":
        return not env[args[0]]
    if op == "not":
        return not word_holds(args[0], n, env)
    if op == "and":
        return all(word_holds(g, n, env) for g in args)
    if op == "or":
        return any(word_holds(g, n, env) for g in args)
    if op == "iff":
        return word_holds(args[0], n, env) == word_holds(args[1], n, env)
    x, body = args
    if op in ("ex1", "all1"):
        domain = range(n)
    else:
        domain = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(range(n), r)]
    results = (word_holds(body, n, {**env, x: v}) for v in domain)
    return any(results) if op in ("ex1", "ex2") else all(results)


def words(width: int, max_len: int):
    letters = list(itertools.product((0, 1), repeat=width))
    for n in range(max_len + 1):
        yield from itertools.product(letters, repeat=n)


def env_of(word, tracks, fo) -> dict | None:
    """Variable values read off the tracks; None when a position track is not a singleton."""
    env = {}
    for i, t in enumerate(tracks):
        ones = frozenset(p for p, letter in enumerate(word) if letter[i])
        if t in fo:
            if len(ones) != 1:
                return None
            env[t] = next(iter(ones))
        else:
            env[t] = ones
    return env


def random_word_formula(rng: random.Random, fo_free, so_free, depth: int = 3) -> W.WordFormula:
    """Random formula whose free variables are among the given ones."""
    counter = itertools.count()

    def atom(fo, so):
        choices = []
        if fo:
            choices += ["lt", "eq", "succ", "first", "le"]
        if fo and so:
            choices += ["in", "in"]
        if so:
            choices += ["sub", "empty"]
        if not choices:
            return rng.choice([W.TRUE, W.FALSE])
        kind = rng.choice(choices)
        x, y = rng.choice(fo) if fo else None, rng.choice(fo) if fo else None
        X, Y = rng.choice(so) if so else None, rng.choice(so) if so else None
        return {
            "lt": lambda: W.lt(x, y), "eq": lambda: W.eq(x, y), "succ": lambda: W.succ(x, y),
            "first": lambda: W.first(x), "le": lambda: W.le(x, y), "in": lambda: W.in_(x, X),
            "sub": lambda: W.sub(X, Y), "empty": lambda: W.empty(X),
        }[kind]()

    def go(d, fo, so):
        r = rng.random()
        if d == 0 or r < 0.25:
            return atom(fo, so)
        if r < 0.35:
            return W.neg(go(d - 1, fo, so))
        if r < 0.6:
            op = rng.choice([W.and_, W.or_, W.iff, W.implies])
            return op(go(d - 1, fo, so), go(d - 1, fo, so))
        n = next(counter)
        if rng.random() < 0.7:
            v = f"q{n}"
            q = rng.choice([W.ex1, W.all1])
            return q(v, go(d - 1, fo + [v], so))
        V = f"Q{n}"
        q = rng.choice([W.ex2, W.all2])
        return q(V, go(d - 1, fo, so + [V]))

    return go(depth, list(fo_free), list(so_free))


# random HistMSO formulas ------------------------------------------------------


def random_closed_formula(rng: random.Random, meta: MetaParams, depth: int = 4, exec_mode: bool = False,
                          set_prob: float = 0.15) -> L.Formula:
    """Closed formula with quantifier depth at most ``depth`` and at least one quantifier."""
    counter = itertools.count()
    values = list(meta.values) + [EMPTY, UNDEF]
    times = ("stime", "rtime")

    def atom(fo, so):
        kinds = ["time", "time", "proc", "type", "obj", "val", "val", "attr", "rb", "ss", "so"]
        if exec_mode:
            kinds += ["vis", "vis", "ar", "ar"]
        if so:
            kinds += ["in", "in"]
        k = rng.choice(kinds)
        a, b = rng.choice(fo), rng.choice(fo)
        if k == "time":
            return L.TimeLt(L.Time(a, rng.choice(times)), L.Time(b, rng.choice(times)))
        if k == "proc":
            return L.ProcIs(a, rng.choice(meta.processes))
        if k == "type":
            return L.TypeIs(a, rng.choice((READ, WRITE)))
        if k == "obj":
            return L.ObjIs(a, rng.choice(meta.objects))
        if k == "val":
            return L.ValIs(a, rng.choice(("ival", "oval")), rng.choice(values))
        if k == "attr":
            attr = rng.choice(["proc", "type", "obj", "value", "value", "time"])
            if attr == "value":
                return L.AttrEq(a, rng.choice(("ival", "oval")), b, rng.choice(("ival", "oval")))
            if attr == "time":
                return L.AttrEq(a, rng.choice(times), b, rng.choice(times))
            return L.AttrEq(a, attr, b, attr)
        if k in ("rb", "ss", "so"):
            return L.Macro(k, (a, b))
        if k == "vis":
            return L.Vis(a, b)
        if k == "ar":
            return L.Ar(a, b)
        return L.InSet(a, rng.choice(so))

    def go(d, fo, so, must_quantify=False):
        r = rng.random()
        if d > 0 and (must_quantify or not fo or r < 0.45):
            n = next(counter)
            if fo and rng.random() < set_prob:
                X = f"X{n}"
                q = rng.choice([L.ExistsSet, L.ForallSet])
                return q(X, go(d - 1, fo, so + [X]))
            v = f"v{n}"
            q = rng.choice([L.Exists, L.Forall])
            return q(v, go(d - 1, fo + [v], so))
        if not fo:
            return rng.choice([L.TRUE, L.FALSE])
        r = rng.random()
        if r < 0.45:
            return atom(fo, so)
        if r < 0.6:
            return L.Not(go(d, fo, so))
        op = rng.choice([L.And, L.Or, L.Implies, L.Iff])
        return op(go(d, fo, so), go(d, fo, so))

    def budget_ok(f):
        return L.quantifier_depth(f) <= depth

    while True:
        f = go(depth, [], [], must_quantify=True)
        if budget_ok(f) and L.is_closed(f):
            return f


def random_meta(rng: random.Random, max_procs: int = 3) -> MetaParams:
    m = rng.randint(1, max_procs)
    objs = ("x", "y")[: rng.randint(1, 2)]
    vals = ("v1", "v2")[: rng.randint(1, 2)]
    return MetaParams(tuple(f"p{i}" for i in range(1, m + 1)), objs, vals)


# automaton languages on short words --------------------------------------------


def language(a, max_len: int) -> dict:
    """Membership of every word of length <= max_len over the automaton's tracks,
    found by one depth-first walk that shares prefixes."""
    width = len(a.tracks)
    letters = list(itertools.product((0, 1), repeat=width))
    steps = [{lvl: 1 for lvl, b in zip(a.index, l) if b} for l in letters]
    out = {}

    def walk(state, prefix):
        out[prefix] = state in a.accepting
        if len(prefix) == max_len:
            return
        for letter, step in zip(letters, steps):
            walk(a.mgr.evaluate(a.delta[state], step), prefix + (letter,))

    walk(a.initial, ())
    return out


# acceptance report ------------------------------------------------------------

ACCEPTANCE_LINES: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
