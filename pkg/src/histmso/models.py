"""Consistency models as closed formulas, trace checking, and implication search."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from . import logic as L
from .encoding import EncodingError, decode, encode, encode_exec
from .evaluator import DEFAULT_SET_CAP, check_model, find_violation
from .history import (
    EMPTY,
    READ,
    UNDEF,
    WRITE,
    AbstractExecution,
    History,
    MetaParams,
    Model,
    history_of,
    is_k_transient,
    validate_execution,
)
from .syntax import parse_model_file
from .translate import TranslationContext, is_encoding, make_engine, translate, variable_name
from .ws1s import Engine, EngineCapError
from .ws1s import formula as W
from .ws1s.automaton import DEFAULT_STATE_CAP


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelDef:
    name: str
    formula: L.Formula
    requires_exec: bool
    notes: str = ""

    def __post_init__(self):
        L.check_closed(self.formula)
        if self.requires_exec != L.uses_exec_relations(self.formula):
            raise ModelError(f"{self.name}: requires_exec does not match the formula")

    @classmethod
    def of(cls, name: str, formula: L.Formula, notes: str = "") -> "ModelDef":
        return cls(name, formula, L.uses_exec_relations(formula), notes)


# catalog ------------------------------------------------------------------------


def rval() -> L.Formula:
    a = "a"
    w = L.Implies(L.TypeIs(a, WRITE), L.ValIs(a, "oval", EMPTY))
    r = L.Implies(L.TypeIs(a, READ), L.last_write(a, a))
    return L.Forall(a, L.And(w, r))


def real_time() -> L.Formula:
    return L.forall("a b", L.Implies(L.rb("a", "b"), L.Ar("a", "b")))


def single_order() -> L.Formula:
    pending = L.Forall("x", L.Implies(L.InSet("x", "X"), L.ValIs("x", "oval", UNDEF)))
    tied = L.forall("a b", L.Iff(L.Vis("a", "b"), L.And(L.Ar("a", "b"), L.Not(L.InSet("a", "X")))))
    return L.ExistsSet("X", L.And(pending, tied))


def linearizability() -> L.Formula:
    return L.conj(single_order(), real_time(), rval())


def finite_inconsistency() -> L.Formula:
    wrong = L.Finite("b", L.Not(L.last_write("b", "a")))
    return L.Exists("a", L.And(L.TypeIs("a", READ), wrong))


def quiescent_consistency() -> L.Formula:
    return L.Implies(L.Finite("a", L.TypeIs("a", WRITE)), finite_inconsistency())


def monotonic_reads() -> L.Formula:
    body = L.Implies(L.And(L.Vis("a", "b"), L.sorr("b", "c")), L.Vis("a", "c"))
    return L.forall("a b c", body)


def read_your_writes() -> L.Formula:
    types = L.And(L.TypeIs("a", WRITE), L.TypeIs("b", READ))
    return L.forall("a b", L.Implies(types, L.Implies(L.so("a", "b"), L.Vis("a", "b"))))


_BUILTINS = (
    ("RVal", rval, "writes return the empty value; reads return the arbitration-last visible write"),
    ("RealTime", real_time, "returns-before is contained in arbitration"),
    ("SingleOrder", single_order, "visibility is arbitration minus edges out of a set of pending operations"),
    ("Linearizability", linearizability, "SingleOrder, RealTime and RVal together"),
    ("QuiescentConsistency", quiescent_consistency,
     "finitely many writes imply a read whose wrong answers are finite; always true on finite traces"),
    ("MonotonicReads", monotonic_reads, "what a read saw stays visible to later reads of the same process"),
    ("ReadYourWrites", read_your_writes, "a process's reads see its earlier writes"),
)


def builtin_models() -> list:
    return [ModelDef.of(name, fn(), notes) for name, fn, notes in _BUILTINS]


def catalog(extra: Optional[dict] = None) -> dict:
    out = {m.name: m for m in builtin_models()}
    for name, m in (extra or {}).items():
        out[name] = m
    return out


def load_model_file(text: str) -> dict:
    """User models from ``Name = formula;`` definitions; builtins are available as ``@Name``."""
    env = {m.name: m.formula for m in builtin_models()}
    parsed = parse_model_file(text, env)
    out = {}
    for name, f in parsed.items():
        try:
            out[name] = ModelDef.of(name, f, "user model")
        except L.FormulaError as e:
            raise ModelError(f"{name}: {e}") from None
    return out


def get_model(name: str, models: Optional[dict] = None) -> ModelDef:
    models = models if models is not None else catalog()
    if name not in models:
        raise ModelError(f"unknown model {name!r}; known: {', '.join(sorted(models))}")
    return models[name]


# checking ---------------------------------------------------------------------


@dataclass
class Verdict:
    model: str
    holds: bool
    engine: str
    witness: dict = field(default_factory=dict)
    k: Optional[int] = None

    def as_dict(self) -> dict:
        out = {"model": self.model, "holds": self.holds, "engine": self.engine, "witness": self.witness}
        if self.k is not None:
            out["k"] = self.k
        return out


def smallest_k(x: AbstractExecution) -> int:
    """Least k for which ``x`` is k-transient."""
    h = x.history
    bound = max((len(h.on_process(p)) for p in h.meta.processes), default=0)
    for k in range(bound + 1):
        if is_k_transient(x, k):
            return k
    return bound


def check_trace(model: Model, m: ModelDef, engine: str = "direct", k: Optional[int] = None,
                state_cap: int = DEFAULT_STATE_CAP, set_cap: int = DEFAULT_SET_CAP) -> Verdict:
    """Decide ``m`` on a history or execution with the evaluator or with automata."""
    if m.requires_exec and not isinstance(model, AbstractExecution):
        raise ModelError(f"{m.name} mentions visibility or arbitration and needs an execution")
    if engine == "direct":
        witness = find_violation(model, m.formula, set_cap)
        return Verdict(m.name, witness is None, "direct", witness or {})
    if engine != "automata":
        raise ModelError(f"unknown engine {engine!r}")
    if isinstance(model, AbstractExecution) and m.requires_exec:
        problems = validate_execution(model, real_time=True)
        if problems:
            raise ModelError("the automata engine needs a real-time execution: " + "; ".join(map(str, problems)))
        if k is None:
            k = smallest_k(model)
        try:
            word = encode_exec(model, k)
        except EncodingError as e:
            raise ModelError(str(e)) from None
        ctx = TranslationContext.for_meta(model.history.meta, "exec", k)
    else:
        word = encode(history_of(model))
        ctx = TranslationContext.for_meta(history_of(model).meta, "history")
        k = None
    tracks = word.as_tracks(ctx.lanes)
    eng = Engine.for_word(ctx.lanes, tracks, state_cap)
    holds = eng.compile(translate(m.formula, ctx), ctx.lanes).accepts(tracks)
    witness = {} if holds else _automata_witness(eng, ctx, word, L.expand_macros(m.formula))
    return Verdict(m.name, holds, "automata", witness, k)


def _automata_witness(eng: Engine, ctx: TranslationContext, word, f: L.Formula) -> dict:
    """Falsifying assignment of the leading universal block, read off an accepted
    word of the negated body (the engine's domain pins the lanes to ``word``)."""
    while isinstance(f, L.And):
        left_ok = eng.compile(translate(f.left, ctx), ctx.lanes).accepts(word.as_tracks(ctx.lanes))
        f = f.right if left_ok else f.left
    names = []
    while isinstance(f, L.Forall):
        names.append(f.var)
        f = f.body
    if not names:
        return {}
    pos_vars = [variable_name(v) for v in names]
    body = W.and_(*(ctx.is_start(p) for p in pos_vars), translate(L.Not(f), ctx, normalize=False))
    order = tuple(ctx.lanes) + tuple(pos_vars)
    res = eng.is_satisfiable(body, order)
    if not res.satisfiable:
        return {}
    starts = {pos: e[0] for pos, e in enumerate(word.event_index) if e and e[1] == "start"}
    out = {}
    for i, v in enumerate(names):
        col = len(ctx.lanes) + i
        pos = next(p for p, letter in enumerate(res.witness) if letter[col])
        out[v] = starts[pos]
    return out


# implication search -------------------------------------------------------------


@dataclass(frozen=True)
class SearchBounds:
    max_ops: int = 5
    procs: int = 2
    objects: int = 1
    values: int = 1
    k: int = 1
    method: str = "automata"  # or "enumerate"
    state_cap: int = DEFAULT_STATE_CAP

    def meta(self) -> MetaParams:
        return MetaParams(
            tuple(f"p{i}" for i in range(1, self.procs + 1)),
            tuple(f"o{i}" for i in range(1, self.objects + 1)) if self.objects > 1 else ("x",),
            tuple(f"v{i}" for i in range(1, self.values + 1)),
        )


@dataclass
class SearchResult:
    m1: str
    m2: str
    counterexample: Optional[AbstractExecution]
    method: str
    detail: str = ""

    @property
    def found(self) -> bool:
        return self.counterexample is not None


def implication_search(m1: ModelDef, m2: ModelDef, bounds: SearchBounds = SearchBounds()) -> SearchResult:
    """Look for a real-time, k-transient execution satisfying ``m1`` but not ``m2``.

    The automata method decides the question for every size over the bounded
    metadata and returns the shortest witness; the enumeration method checks
    every execution with at most ``max_ops`` operations with the evaluator.
    A found counterexample is always confirmed with the evaluator.
    """
    if bounds.method == "automata":
        x, detail = _search_automata(m1, m2, bounds)
    elif bounds.method == "enumerate":
        x, detail = _search_enumerate(m1, m2, bounds)
    else:
        raise ModelError(f"unknown search method {bounds.method!r}")
    if x is not None and not (check_model(x, m1.formula) and not check_model(x, m2.formula)):
        raise ModelError(f"search returned an execution the evaluator does not confirm: {detail}")
    return SearchResult(m1.name, m2.name, x, bounds.method, detail)


def _search_automata(m1: ModelDef, m2: ModelDef, bounds: SearchBounds):
    ctx = TranslationContext.for_meta(bounds.meta(), "exec", bounds.k)
    eng = make_engine(ctx, bounds.state_cap)
    goal = W.and_(is_encoding(ctx), translate(m1.formula, ctx), W.neg(translate(m2.formula, ctx)))
    res = eng.is_satisfiable(goal, ctx.lanes)
    if not res.satisfiable:
        return None, f"unsatisfiable over {ctx.layout.header()} ({res.states} states)"
    from .encoding import WordModel

    w = WordModel(ctx.layout, [tuple(letter) for letter in res.witness])
    x = decode(w)
    return x, f"witness word of length {len(res.witness)}"


def _search_enumerate(m1: ModelDef, m2: ModelDef, bounds: SearchBounds):
    count = 0
    for x in enumerate_executions(bounds.meta(), bounds.max_ops, bounds.k):
        count += 1
        if check_model(x, m1.formula) and not check_model(x, m2.formula):
            return x, f"found after {count} executions"
    return None, f"checked {count} executions"


def enumerate_histories(meta: MetaParams, max_ops: int):
    """Every history up to timestamp renaming with at most ``max_ops`` operations."""
    m = len(meta.processes)
    attrs = [(WRITE, v, EMPTY) for v in meta.values] + [(READ, EMPTY, v) for v in meta.values]
    attrs += [(READ, EMPTY, EMPTY)]

    def shapes(n_left, running, events):
        yield events
        for p in range(m):
            if p in running:
                yield from shapes(n_left, running - {p}, events + [("r", p)])
            elif n_left:
                yield from shapes(n_left - 1, running | {p}, events + [("s", p)])

    for events in shapes(max_ops, frozenset(), []):
        # only complete shapes: every start has its return
        opened = sum(1 for e in events if e[0] == "s")
        if opened != sum(1 for e in events if e[0] == "r"):
            continue
        for combo in itertools.product(itertools.product(meta.objects, attrs), repeat=opened):
            yield _history_from_events(meta, events, combo)


def _history_from_events(meta: MetaParams, events, combo) -> History:
    from .history import Operation

    ops, running, n = [], {}, 0
    for t, (kind, p) in enumerate(events, start=1):
        if kind == "s":
            running[p] = (n, t)
            n += 1
        else:
            i, s = running.pop(p)
            obj, (typ, iv, ov) = combo[i]
            ops.append(Operation(f"o{i + 1}", meta.processes[p], s, t, typ, obj, iv, ov))
    ops.sort(key=lambda o: o.stime)
    return History(meta, tuple(ops))


def enumerate_executions(meta: MetaParams, max_ops: int, k: Optional[int] = None):
    """Every real-time execution (k-transient when ``k`` is given) with at most ``max_ops`` operations."""
    from .traceio import order_relation

    for h in enumerate_histories(meta, max_ops):
        ids = h.ids
        rb_pairs = set(h.rb_pairs())
        orders = [p for p in itertools.permutations(ids) if all(p.index(a) < p.index(b) for a, b in rb_pairs)]
        pairs = [(a, b) for a in ids for b in ids if a != b and (b, a) not in rb_pairs]
        for perm in orders:
            ar = order_relation(list(perm))
            for bits in itertools.product((0, 1), repeat=len(pairs)):
                vis = frozenset(p for p, bit in zip(pairs, bits) if bit)
                x = AbstractExecution(h, vis, ar)
                if validate_execution(x, real_time=True):
                    continue
                if k is not None and not is_k_transient(x, k):
                    continue
                yield x


def random_search(m1: ModelDef, m2: ModelDef, trials: int, seed: int = 0, **cfg) -> Optional[AbstractExecution]:
    """Random counterexample search with the generator; a cheap complement to the exact methods."""
    from .traceio import GeneratorConfig, gen_exec

    rng = random.Random(seed)
    for i in range(trials):
        x = gen_exec(GeneratorConfig(seed=rng.randrange(1 << 30), **cfg))
        if check_model(x, m1.formula) and not check_model(x, m2.formula):
            return x
    return None


__all__ = [
    "EngineCapError",
    "ModelDef",
    "ModelError",
    "SearchBounds",
    "SearchResult",
    "Verdict",
    "builtin_models",
    "catalog",
    "check_trace",
    "enumerate_executions",
    "enumerate_histories",
    "get_model",
    "implication_search",
    "linearizability",
    "load_model_file",
    "monotonic_reads",
    "quiescent_consistency",
    "random_search",
    "read_your_writes",
    "real_time",
    "rval",
    "single_order",
    "smallest_k",
]
