"""Direct semantics of HistMSO over finite histories and abstract executions.

Quantifiers are evaluated by enumeration: operation variables range over the
operations, set variables over all subsets. This is the reference oracle for
the automata pipeline, so it favours obviousness over speed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import logic as L
from .history import AbstractExecution, History, Model, history_of

DEFAULT_SET_CAP = 16


class EvalError(ValueError):
    pass


@dataclass
class Assignment:
    fo: dict = field(default_factory=dict)
    so: dict = field(default_factory=dict)

    def bind(self, var, op_id) -> "Assignment":
        return Assignment({**self.fo, var: op_id}, self.so)

    def bind_set(self, var, ids) -> "Assignment":
        return Assignment(self.fo, {**self.so, var: frozenset(ids)})


class _Evaluator:
    def __init__(self, model: Model, set_cap: int):
        self.h = history_of(model)
        self.x = model if isinstance(model, AbstractExecution) else None
        self.ids = self.h.ids
        self.set_cap = set_cap

    def op(self, env: Assignment, var):
        try:
            return self.h.op(env.fo[var])
        except KeyError:
            raise EvalError(f"unbound variable {var!r}") from None

    def rel(self, name):
        if self.x is None:
            raise EvalError(f"{name} needs an abstract execution, got a bare history")
        return self.x.vis if name == "vis" else self.x.ar

    def subsets(self):
        if len(self.ids) > self.set_cap:
            raise EvalError(f"set quantification over {len(self.ids)} operations exceeds cap {self.set_cap}")
        for r in range(len(self.ids) + 1):
            yield from itertools.combinations(self.ids, r)

    def ev(self, f: L.Formula, env: Assignment) -> bool:
        if isinstance(f, L.Not):
            return not self.ev(f.body, env)
        if isinstance(f, L.Or):
            return self.ev(f.left, env) or self.ev(f.right, env)
        if isinstance(f, L.And):
            return self.ev(f.left, env) and self.ev(f.right, env)
        if isinstance(f, L.Implies):
            return (not self.ev(f.left, env)) or self.ev(f.right, env)
        if isinstance(f, L.Iff):
            return self.ev(f.left, env) == self.ev(f.right, env)
        if isinstance(f, L.Forall):
            return all(self.ev(f.body, env.bind(f.var, i)) for i in self.ids)
        if isinstance(f, L.Exists):
            return any(self.ev(f.body, env.bind(f.var, i)) for i in self.ids)
        if isinstance(f, L.ForallSet):
            return all(self.ev(f.body, env.bind_set(f.var, s)) for s in self.subsets())
        if isinstance(f, L.ExistsSet):
            return any(self.ev(f.body, env.bind_set(f.var, s)) for s in self.subsets())
        if isinstance(f, L.Finite):
            # every set of operations of a finite history is finite
            return True
        if isinstance(f, L.Macro):
            return self.macro(f, env)
        return self.atom(f, env)

    def atom(self, f: L.Formula, env: Assignment) -> bool:
        if isinstance(f, L.Const):
            return f.value
        if isinstance(f, L.AttrEq):
            return self.op(env, f.a).attr(f.attr_a) == self.op(env, f.b).attr(f.attr_b)
        if isinstance(f, L.TimeLt):
            return self.time(f.left, env) < self.time(f.right, env)
        if isinstance(f, L.TimeLe):
            return self.time(f.left, env) <= self.time(f.right, env)
        if isinstance(f, L.ProcIs):
            return self.op(env, f.a).proc == f.proc
        if isinstance(f, L.TypeIs):
            return self.op(env, f.a).type == f.type
        if isinstance(f, L.ObjIs):
            return self.op(env, f.a).obj == f.obj
        if isinstance(f, L.ValIs):
            return self.op(env, f.a).attr(f.attr) == f.value
        if isinstance(f, L.InSet):
            if f.setvar not in env.so:
                raise EvalError(f"unbound set variable {f.setvar!r}")
            return self.op(env, f.a).id in env.so[f.setvar]
        if isinstance(f, L.Vis):
            return (self.op(env, f.a).id, self.op(env, f.b).id) in self.rel("vis")
        if isinstance(f, L.Ar):
            return (self.op(env, f.a).id, self.op(env, f.b).id) in self.rel("ar")
        raise EvalError(f"cannot evaluate {f!r}")

    def time(self, t: L.Time, env: Assignment):
        return self.op(env, t.var).attr(t.attr)

    def macro(self, f: L.Macro, env: Assignment) -> bool:
        name = f.name
        if name == "rb":
            a, b = (self.op(env, v) for v in f.args)
            return a.rtime < b.stime
        if name == "ss":
            a, b = (self.op(env, v) for v in f.args)
            return a.proc == b.proc
        if name == "so":
            a, b = (self.op(env, v) for v in f.args)
            return a.proc == b.proc and a.rtime < b.stime
        if name == "sorr":
            a, b = (self.op(env, v) for v in f.args)
            return a.type == b.type == "read" and a.proc == b.proc and a.rtime < b.stime
        if name == "dsucc":
            a, b = (self.op(env, v) for v in f.args[:2])
            p = f.args[2]
            if b.proc != p or not a.rtime < b.stime:
                return False
            return not any(c.proc == b.proc and a.rtime < c.stime and c.rtime < b.stime for c in self.h.ops)
        if name == "ctxt":
            b, a = (self.op(env, v) for v in f.args)
            return (b.id, a.id) in self.rel("vis") and b.type == "write" and b.obj == a.obj
        if name == "lastwrite":
            v, a = (self.op(env, x) for x in f.args)
            vis = self.rel("vis")
            context = [c for c in self.h.ops if (c.id, a.id) in vis and c.type == "write" and c.obj == a.obj]
            if not context:
                return True
            ar = self.rel("ar")
            last = [c for c in context if not any((c.id, d.id) in ar for d in context)]
            # ar is total, so the context has exactly one ar-maximal write
            return all(c.ival == v.oval for c in last)
        raise L.FormulaError(f"unknown macro {name!r}")


def eval_formula(model: Model, assignment: Optional[Assignment], f: L.Formula, set_cap: int = DEFAULT_SET_CAP) -> bool:
    """Truth value of ``f`` in ``model`` under ``assignment``."""
    env = assignment or Assignment()
    fo, so_ = L.free_variables(f)
    missing = (set(fo) - set(env.fo)) | (set(so_) - set(env.so))
    if missing:
        raise EvalError(f"unbound free variables {sorted(missing)}")
    if L.uses_exec_relations(f) and not isinstance(model, AbstractExecution):
        raise EvalError("formula mentions vis/ar but the model is a bare history")
    ids = set(history_of(model).ids)
    for var, i in env.fo.items():
        if i not in ids:
            raise EvalError(f"{var} is bound to unknown operation {i!r}")
    for var, s in env.so.items():
        if not set(s) <= ids:
            raise EvalError(f"{var} contains unknown operations")
    return _Evaluator(model, set_cap).ev(f, env)


def check_model(model: Model, f: L.Formula, set_cap: int = DEFAULT_SET_CAP) -> bool:
    L.check_closed(f)
    return eval_formula(model, Assignment(), f, set_cap)


def find_violation(model: Model, f: L.Formula, set_cap: int = DEFAULT_SET_CAP) -> Optional[dict]:
    """A falsifying assignment of the leading universal block, or None when ``f`` holds.

    Leading conjunctions are searched conjunct by conjunct; when the first
    failing part does not start with a universal quantifier the witness is empty.
    """
    L.check_closed(f)
    ev = _Evaluator(model, set_cap)
    env = Assignment()

    def search(g: L.Formula, env: Assignment) -> Optional[dict]:
        if ev.ev(g, env):
            return None
        if isinstance(g, L.And):
            return search(g.left, env) if not ev.ev(g.left, env) else search(g.right, env)
        if isinstance(g, L.Forall):
            for i in ev.ids:
                env2 = env.bind(g.var, i)
                if not ev.ev(g.body, env2):
                    return search(g.body, env2)
        if isinstance(g, L.Implies):
            return search(g.right, env)
        return dict(env.fo)

    return search(f, env)
