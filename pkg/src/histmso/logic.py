"""Abstract syntax of HistMSO formulas, binding analysis and the macro layer.

Operation variables (first order) and set variables (second order) are plain
strings; which order a name has is decided by the node that binds or uses it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .history import EMPTY, READ, UNDEF, WRITE, Special

TIME_ATTRS = ("stime", "rtime")
VALUE_ATTRS = ("ival", "oval")
ATTR_KIND = {
    "stime": "time",
    "rtime": "time",
    "ival": "value",
    "oval": "value",
    "proc": "proc",
    "obj": "obj",
    "type": "type",
}


class FormulaError(ValueError):
    pass


class Formula:
    """Base class of every formula node."""

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __rshift__(self, other):
        return Implies(self, other)

    def __str__(self) -> str:
        from .syntax import format_formula

        return format_formula(self)


@dataclass(frozen=True)
class Time:
    var: str
    attr: str

    def __post_init__(self):
        if self.attr not in TIME_ATTRS:
            raise FormulaError(f"{self.attr!r} is not a timestamp attribute")


def stime(var: str) -> Time:
    return Time(var, "stime")


def rtime(var: str) -> Time:
    return Time(var, "rtime")


# atoms ---------------------------------------------------------------------


@dataclass(frozen=True)
class AttrEq(Formula):
    a: str
    attr_a: str
    b: str
    attr_b: str

    def __post_init__(self):
        for at in (self.attr_a, self.attr_b):
            if at not in ATTR_KIND:
                raise FormulaError(f"unknown attribute {at!r}")
        if ATTR_KIND[self.attr_a] != ATTR_KIND[self.attr_b]:
            raise FormulaError(f"ill-kinded comparison {self.attr_a} = {self.attr_b}")


@dataclass(frozen=True)
class TimeLt(Formula):
    left: Time
    right: Time


@dataclass(frozen=True)
class ProcIs(Formula):
    a: str
    proc: str


@dataclass(frozen=True)
class TypeIs(Formula):
    a: str
    type: str

    def __post_init__(self):
        if self.type not in (READ, WRITE):
            raise FormulaError(f"unknown operation type {self.type!r}")


@dataclass(frozen=True)
class ObjIs(Formula):
    a: str
    obj: str


@dataclass(frozen=True)
class ValIs(Formula):
    """``a.ival = v`` or ``a.oval = v`` where v may be EMPTY or UNDEF."""

    a: str
    attr: str
    value: Union[str, Special]

    def __post_init__(self):
        if self.attr not in VALUE_ATTRS:
            raise FormulaError(f"{self.attr!r} is not a value attribute")


@dataclass(frozen=True)
class InSet(Formula):
    a: str
    setvar: str


@dataclass(frozen=True)
class Vis(Formula):
    a: str
    b: str


@dataclass(frozen=True)
class Ar(Formula):
    a: str
    b: str


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)

# connectives ---------------------------------------------------------------


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ForallSet(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsSet(Formula):
    var: str
    body: Formula


# macros --------------------------------------------------------------------


@dataclass(frozen=True)
class Macro(Formula):
    """A named derived relation over operation variables (and literals)."""

    name: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class TimeLe(Formula):
    left: Time
    right: Time


@dataclass(frozen=True)
class Finite(Formula):
    """Finiteness of the comprehension ``{var | body}``."""

    var: str
    body: Formula


QUANTIFIERS = (Forall, Exists, ForallSet, ExistsSet)
FO_QUANTIFIERS = (Forall, Exists)
SO_QUANTIFIERS = (ForallSet, ExistsSet)
BINARY = (Or, And, Implies, Iff)


def rb(a, b):
    return Macro("rb", (a, b))


def ss(a, b):
    return Macro("ss", (a, b))


def so(a, b):
    return Macro("so", (a, b))


def sorr(a, b):
    return Macro("sorr", (a, b))


def dsucc(a, b, p):
    return Macro("dsucc", (a, b, p))


def ctxt(b, a):
    """``b`` belongs to the context of ``a``."""
    return Macro("ctxt", (b, a))


def last_write(v, a):
    """``v.oval = lastWrite(ctxt(a))``."""
    return Macro("lastwrite", (v, a))


def conj(*fs) -> Formula:
    fs = [f for f in fs if f != TRUE]
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def disj(*fs) -> Formula:
    fs = [f for f in fs if f != FALSE]
    if not fs:
        return FALSE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Or(f, out)
    return out


def forall(vars_, body) -> Formula:
    for v in reversed(vars_.split() if isinstance(vars_, str) else vars_):
        body = Forall(v, body)
    return body


def exists(vars_, body) -> Formula:
    for v in reversed(vars_.split() if isinstance(vars_, str) else vars_):
        body = Exists(v, body)
    return body


def forall_in(var, setvar, body) -> Formula:
    return Forall(var, Implies(InSet(var, setvar), body))


def exists_in(var, setvar, body) -> Formula:
    return Exists(var, And(InSet(var, setvar), body))


# traversal -----------------------------------------------------------------


def children(f: Formula) -> tuple:
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, QUANTIFIERS + (Finite,)):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from walk(c)


def _atom_vars(f: Formula) -> tuple[set, set]:
    """First- and second-order variables occurring in an atom or macro."""
    if isinstance(f, AttrEq):
        return {f.a, f.b}, set()
    if isinstance(f, (TimeLt, TimeLe)):
        return {f.left.var, f.right.var}, set()
    if isinstance(f, (ProcIs, TypeIs, ObjIs, ValIs)):
        return {f.a}, set()
    if isinstance(f, InSet):
        return {f.a}, {f.setvar}
    if isinstance(f, (Vis, Ar)):
        return {f.a, f.b}, set()
    if isinstance(f, Macro):
        n = MACRO_ARITY[f.name][0] if f.name in MACRO_ARITY else len(f.args)
        return set(f.args[:n]), set()
    return set(), set()


def free_variables(f: Formula) -> tuple[frozenset, frozenset]:
    """Free (first-order, second-order) variables."""
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, BINARY):
        a1, b1 = free_variables(f.left)
        a2, b2 = free_variables(f.right)
        return a1 | a2, b1 | b2
    if isinstance(f, FO_QUANTIFIERS + (Finite,)):
        a, b = free_variables(f.body)
        return a - {f.var}, b
    if isinstance(f, SO_QUANTIFIERS):
        a, b = free_variables(f.body)
        return a, b - {f.var}
    fo, so_ = _atom_vars(f)
    return frozenset(fo), frozenset(so_)


def is_closed(f: Formula) -> bool:
    fo, so_ = free_variables(f)
    return not fo and not so_


def all_names(f: Formula) -> set:
    names = set()
    for g in walk(f):
        if isinstance(g, QUANTIFIERS + (Finite,)):
            names.add(g.var)
        fo, so_ = _atom_vars(g)
        names |= fo | so_
    return names


def uses_exec_relations(f: Formula) -> bool:
    """True when the formula mentions visibility or arbitration (directly or via a macro)."""
    for g in walk(f):
        if isinstance(g, (Vis, Ar)):
            return True
        if isinstance(g, Macro) and g.name in EXEC_MACROS:
            return True
    return False


def quantifier_depth(f: Formula) -> int:
    inner = max((quantifier_depth(c) for c in children(f)), default=0)
    return inner + (1 if isinstance(f, QUANTIFIERS) else 0)


def fresh_name(avoid: set, base: str = "c") -> str:
    for i in itertools.count(1):
        name = f"{base}{i}"
        if name not in avoid:
            return name
    raise AssertionError


# substitution --------------------------------------------------------------


def _rename_atom(f: Formula, m: Callable[[str], str], ms: Callable[[str], str]) -> Formula:
    if isinstance(f, AttrEq):
        return AttrEq(m(f.a), f.attr_a, m(f.b), f.attr_b)
    if isinstance(f, (TimeLt, TimeLe)):
        return type(f)(Time(m(f.left.var), f.left.attr), Time(m(f.right.var), f.right.attr))
    if isinstance(f, ProcIs):
        return ProcIs(m(f.a), f.proc)
    if isinstance(f, TypeIs):
        return TypeIs(m(f.a), f.type)
    if isinstance(f, ObjIs):
        return ObjIs(m(f.a), f.obj)
    if isinstance(f, ValIs):
        return ValIs(m(f.a), f.attr, f.value)
    if isinstance(f, InSet):
        return InSet(m(f.a), ms(f.setvar))
    if isinstance(f, (Vis, Ar)):
        return type(f)(m(f.a), m(f.b))
    if isinstance(f, Macro):
        n = MACRO_ARITY[f.name][0] if f.name in MACRO_ARITY else len(f.args)
        return Macro(f.name, tuple(m(x) for x in f.args[:n]) + f.args[n:])
    return f


def substitute(f: Formula, fo: dict | None = None, so_: dict | None = None) -> Formula:
    """Capture-avoiding renaming of free variables."""
    fo = dict(fo or {})
    so_ = dict(so_ or {})
    if not fo and not so_:
        return f
    if isinstance(f, Not):
        return Not(substitute(f.body, fo, so_))
    if isinstance(f, BINARY):
        return type(f)(substitute(f.left, fo, so_), substitute(f.right, fo, so_))
    if isinstance(f, QUANTIFIERS + (Finite,)):
        is_fo = isinstance(f, FO_QUANTIFIERS + (Finite,))
        table = fo if is_fo else so_
        table = {k: v for k, v in table.items() if k != f.var}
        fo2, so2 = (table, so_) if is_fo else (fo, table)
        free_fo, free_so = free_variables(f.body)
        targets = set(fo2.values()) | set(so2.values())
        var, body = f.var, f.body
        if var in targets and (free_fo | free_so) & (set(fo2) | set(so2)):
            new = fresh_name(all_names(f) | targets | set(fo2) | set(so2), var.rstrip("0123456789") or "v")
            body = substitute(body, {var: new} if is_fo else None, None if is_fo else {var: new})
            var = new
        return type(f)(var, substitute(body, fo2, so2))
    return _rename_atom(f, lambda v: fo.get(v, v), lambda v: so_.get(v, v))


def alpha_normalize(f: Formula) -> Formula:
    """Rename bound variables to canonical, pairwise distinct names."""
    fo_free, so_free = free_variables(f)
    avoid = set(fo_free) | set(so_free)
    counter = itertools.count(1)

    def go(g: Formula, fo: dict, so_: dict) -> Formula:
        if isinstance(g, Not):
            return Not(go(g.body, fo, so_))
        if isinstance(g, BINARY):
            return type(g)(go(g.left, fo, so_), go(g.right, fo, so_))
        if isinstance(g, QUANTIFIERS + (Finite,)):
            is_fo = isinstance(g, FO_QUANTIFIERS + (Finite,))
            while True:
                name = f"{'x' if is_fo else 'X'}{next(counter)}"
                if name not in avoid:
                    break
            if is_fo:
                return type(g)(name, go(g.body, {**fo, g.var: name}, so_))
            return type(g)(name, go(g.body, fo, {**so_, g.var: name}))
        return _rename_atom(g, lambda v: fo.get(v, v), lambda v: so_.get(v, v))

    return go(f, {}, {})


def alpha_equivalent(f: Formula, g: Formula) -> bool:
    return alpha_normalize(f) == alpha_normalize(g)


# macro expansion -----------------------------------------------------------


def _exp_rb(args, avoid):
    a, b = args
    return TimeLt(rtime(a), stime(b))


def _exp_ss(args, avoid):
    a, b = args
    return AttrEq(a, "proc", b, "proc")


def _exp_so(args, avoid):
    a, b = args
    return And(_exp_ss(args, avoid), _exp_rb(args, avoid))


def _exp_sorr(args, avoid):
    a, b = args
    return conj(TypeIs(a, READ), TypeIs(b, READ), _exp_so(args, avoid))


def _exp_dsucc(args, avoid):
    a, b, p = args
    c = fresh_name(avoid | {a, b}, "c")
    between = conj(_exp_ss((c, b), avoid), _exp_rb((a, c), avoid), _exp_rb((c, b), avoid))
    return conj(ProcIs(b, p), _exp_rb((a, b), avoid), Not(Exists(c, between)))


def _exp_ctxt(args, avoid):
    b, a = args
    return conj(Vis(b, a), TypeIs(b, WRITE), AttrEq(b, "obj", a, "obj"))


def _exp_lastwrite(args, avoid):
    v, a = args
    c = fresh_name(avoid | {v, a}, "c")
    d = fresh_name(avoid | {v, a, c}, "d")
    premise = And(_exp_ctxt((c, a), avoid), Not(AttrEq(c, "ival", v, "oval")))
    return Forall(c, Implies(premise, Exists(d, And(_exp_ctxt((d, a), avoid), Ar(c, d)))))


# name -> (number of operation-variable arguments, expander)
MACRO_ARITY: dict = {
    "rb": (2, _exp_rb),
    "ss": (2, _exp_ss),
    "so": (2, _exp_so),
    "sorr": (2, _exp_sorr),
    "dsucc": (2, _exp_dsucc),
    "ctxt": (2, _exp_ctxt),
    "lastwrite": (2, _exp_lastwrite),
}
EXEC_MACROS = {"ctxt", "lastwrite"}


def expand_macros(f: Formula) -> Formula:
    """Rewrite every macro into the core grammar (connective sugar is kept)."""
    avoid = all_names(f)
    return _expand(f, avoid)


def _expand(f: Formula, avoid: set) -> Formula:
    if isinstance(f, Macro):
        if f.name not in MACRO_ARITY:
            raise FormulaError(f"unknown macro {f.name!r}")
        n, fn = MACRO_ARITY[f.name]
        if len(f.args) != n + (1 if f.name == "dsucc" else 0):
            raise FormulaError(f"macro {f.name} takes {n} operation arguments")
        return fn(f.args, avoid)
    if isinstance(f, TimeLe):
        return Or(TimeLt(f.left, f.right), AttrEq(f.left.var, f.left.attr, f.right.var, f.right.attr))
    if isinstance(f, Finite):
        x = f.var
        body = _expand(f.body, avoid)
        y = fresh_name(avoid | all_names(body) | {x}, "y")
        avoid = avoid | {y}
        maximal = Forall(y, Implies(substitute(body, {x: y}), Or(TimeLt(stime(y), stime(x)), AttrEq(y, "stime", x, "stime"))))
        return Or(Not(Exists(x, body)), Exists(x, And(body, maximal)))
    if isinstance(f, Not):
        return Not(_expand(f.body, avoid))
    if isinstance(f, BINARY):
        return type(f)(_expand(f.left, avoid), _expand(f.right, avoid))
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, _expand(f.body, avoid))
    return f


def desugar(f: Formula) -> Formula:
    """Reduce to disjunction, negation and universal quantifiers only."""
    if isinstance(f, Not):
        return Not(desugar(f.body))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, And):
        return Not(Or(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Iff):
        l, r = desugar(f.left), desugar(f.right)
        return Not(Or(Not(Or(Not(l), r)), Not(Or(Not(r), l))))
    if isinstance(f, Forall):
        return Forall(f.var, desugar(f.body))
    if isinstance(f, Exists):
        return Not(Forall(f.var, Not(desugar(f.body))))
    if isinstance(f, ForallSet):
        return ForallSet(f.var, desugar(f.body))
    if isinstance(f, ExistsSet):
        return Not(ForallSet(f.var, Not(desugar(f.body))))
    if isinstance(f, (Macro, TimeLe, Finite)):
        return desugar(expand_macros(f))
    return f


def check_closed(f: Formula) -> None:
    fo, so_ = free_variables(f)
    if fo or so_:
        raise FormulaError(f"formula is not closed; free variables {sorted(fo | so_)}")


__all__ = [name for name in dir() if not name.startswith("_")]
