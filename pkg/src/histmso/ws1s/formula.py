"""Formulas of monadic second-order logic over finite words.

Nodes are interned: structurally equal formulas are the same object, which
lets the compiler cache automata by identity. Position variables and
position-set variables are strings; their order follows from how they are used.
"""

from __future__ import annotations

import weakref

# atom kinds and the order of each argument (1 = position, 2 = set)
ATOMS = {
    "lt": (1, 1),
    "eq": (1, 1),
    "succ": (1, 1),  # succ(x, y): y = x + 1
    "first": (1,),
    "last": (1,),
    "in": (1, 2),
    "sub": (2, 2),
    "empty": (2,),
}
QUANT = {"ex1": 1, "ex2": 2, "all1": 1, "all2": 2}


class WordFormula:
    __slots__ = ("op", "args", "__weakref__")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, op: str, *args):
        key = (op,) + args
        obj = cls._table.get(key)
        if obj is None:
            obj = object.__new__(cls)
            obj.op = op
            obj.args = args
            cls._table[key] = obj
        return obj

    def __reduce__(self):
        return (WordFormula, (self.op,) + self.args)

    def __repr__(self) -> str:
        return to_text(self)

    def __and__(self, other):
        return and_(self, other)

    def __or__(self, other):
        return or_(self, other)

    def __invert__(self):
        return neg(self)


TRUE = WordFormula("true")
FALSE = WordFormula("false")


def lt(x, y):
    return FALSE if x == y else WordFormula("lt", x, y)


def eq(x, y):
    return WordFormula("eq", x, y)


def le(x, y):
    return or_(lt(x, y), eq(x, y))


def succ(x, y):
    """``y`` is the position right after ``x``."""
    return WordFormula("succ", x, y)


def first(x):
    return WordFormula("first", x)


def last(x):
    return WordFormula("last", x)


def in_(x, X):
    return WordFormula("in", x, X)


def sub(X, Y):
    return WordFormula("sub", X, Y)


def empty(X):
    return WordFormula("empty", X)


def neg(f):
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if f.op == "not":
        return f.args[0]
    return WordFormula("not", f)


def and_(*fs):
    parts = []
    for f in fs:
        if f is FALSE:
            return FALSE
        if f is TRUE:
            continue
        parts.extend(f.args if f.op == "and" else (f,))
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return WordFormula("and", *parts)


def or_(*fs):
    parts = []
    for f in fs:
        if f is TRUE:
            return TRUE
        if f is FALSE:
            continue
        parts.extend(f.args if f.op == "or" else (f,))
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return WordFormula("or", *parts)


def implies(f, g):
    return or_(neg(f), g)


def iff(f, g):
    return WordFormula("iff", f, g)


def ex1(x, f):
    return WordFormula("ex1", x, f)


def ex2(X, f):
    return WordFormula("ex2", X, f)


def all1(x, f):
    return WordFormula("all1", x, f)


def all2(X, f):
    return WordFormula("all2", X, f)


def ex1s(xs, f):
    for x in reversed(list(xs)):
        f = ex1(x, f)
    return f


def all1s(xs, f):
    for x in reversed(list(xs)):
        f = all1(x, f)
    return f


# analysis ------------------------------------------------------------------


class WordFormulaError(ValueError):
    pass


def free_vars(f: WordFormula) -> tuple[frozenset, frozenset]:
    """Free (position, set) variables."""
    memo: dict = {}

    def go(g):
        r = memo.get(g)
        if r is not None:
            return r
        if g.op in ATOMS:
            fo = frozenset(a for a, k in zip(g.args, ATOMS[g.op]) if k == 1)
            so = frozenset(a for a, k in zip(g.args, ATOMS[g.op]) if k == 2)
        elif g.op in QUANT:
            fo, so = go(g.args[1])
            if QUANT[g.op] == 1:
                fo = fo - {g.args[0]}
            else:
                so = so - {g.args[0]}
        elif g.op in ("true", "false"):
            fo = so = frozenset()
        else:
            fo = so = frozenset()
            for c in g.args:
                a, b = go(c)
                fo, so = fo | a, so | b
        memo[g] = (fo, so)
        return fo, so

    fo, so = go(f)
    if fo & so:
        raise WordFormulaError(f"variables used both as positions and sets: {sorted(fo & so)}")
    return fo, so


def size(f: WordFormula) -> int:
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if g.op not in ATOMS and g.op not in QUANT:
            stack.extend(g.args)
        elif g.op in QUANT:
            stack.append(g.args[1])
    return len(seen)


_INFIX = {"and": "&", "or": "|"}


def to_text(f: WordFormula, mona: bool = False) -> str:
    """Render in MONA concrete syntax."""
    op, args = f.op, f.args
    if op == "true":
        return "true"
    if op == "false":
        return "false"
    if op == "lt":
        return f"{args[0]} < {args[1]}"
    if op == "eq":
        return f"{args[0]} = {args[1]}"
    if op == "succ":
        return f"{args[1]} = {args[0]} + 1"
    if op == "first":
        return f"{args[0]} = 0"
    if op == "last":
        if mona:
            raise WordFormulaError("'last' has no WS1S rendering")
        return f"last({args[0]})"
    if op == "in":
        return f"{args[0]} in {args[1]}"
    if op == "sub":
        return f"{args[0]} sub {args[1]}"
    if op == "empty":
        return f"{args[0]} = empty"
    if op == "not":
        return f"~({to_text(args[0], mona)})"
    if op in _INFIX:
        return "(" + f" {_INFIX[op]} ".join(to_text(a, mona) for a in args) + ")"
    if op == "iff":
        return f"({to_text(args[0], mona)} <=> {to_text(args[1], mona)})"
    if op in QUANT:
        return f"({op} {args[0]}: {to_text(args[1], mona)})"
    raise WordFormulaError(f"unknown node {op!r}")
