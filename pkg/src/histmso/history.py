"""Histories, abstract executions and the relations derived from their timelines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Union


class Special(enum.Enum):
    """Distinguished non-values: no value at all, and a value never returned."""

    EMPTY = "_"
    UNDEF = "undef"

    def __str__(self) -> str:
        return self.value


EMPTY = Special.EMPTY
UNDEF = Special.UNDEF

READ = "read"
WRITE = "write"
OP_TYPES = (READ, WRITE)

Value = Union[str, Special]


class HistoryError(ValueError):
    """Raised when a history or execution breaks one of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class MetaParams:
    processes: tuple
    objects: tuple
    values: tuple
    op_types: tuple = OP_TYPES

    def __post_init__(self):
        for name in ("processes", "objects", "values", "op_types"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def problems(self) -> list[str]:
        out = []
        for name in ("processes", "objects", "values", "op_types"):
            items = getattr(self, name)
            if not items:
                out.append(f"{name} must be non-empty")
            if len(set(items)) != len(items):
                out.append(f"{name} contains duplicates")
        for v in self.values:
            if isinstance(v, Special) or v in ("_", "undef"):
                out.append(f"value {v!r} clashes with EMPTY/UNDEF")
        if set(self.op_types) != set(OP_TYPES):
            out.append("only read and write operation types are supported")
        return out

    def process_index(self, p) -> int:
        return self.processes.index(p)


def as_time(t) -> Fraction:
    if isinstance(t, Fraction):
        return t
    if isinstance(t, float):
        return Fraction(t).limit_denominator()
    return Fraction(t)


@dataclass(frozen=True)
class Operation:
    id: str
    proc: str
    stime: Fraction
    rtime: Fraction
    type: str
    obj: str
    ival: Value = EMPTY
    oval: Value = EMPTY

    def __post_init__(self):
        object.__setattr__(self, "stime", as_time(self.stime))
        object.__setattr__(self, "rtime", as_time(self.rtime))

    def attr(self, name: str):
        return getattr(self, name)


@dataclass(frozen=True)
class Violation:
    invariant: str
    op_ids: tuple = ()

    def __str__(self) -> str:
        if self.op_ids:
            return f"{self.invariant}: {', '.join(map(str, self.op_ids))}"
        return self.invariant


@dataclass(frozen=True)
class History:
    meta: MetaParams
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ops = tuple(sorted(self.ops, key=lambda o: (o.stime, o.id)))
        object.__setattr__(self, "ops", ops)

    @cached_property
    def by_id(self) -> dict:
        return {o.id: o for o in self.ops}

    @property
    def ids(self) -> list:
        return [o.id for o in self.ops]

    def op(self, op_id) -> Operation:
        return self.by_id[op_id]

    def __len__(self) -> int:
        return len(self.ops)

    def ord(self) -> list:
        """Operation ids sorted by start time."""
        return [o.id for o in self.ops]

    def on_process(self, p) -> list:
        return [o.id for o in self.ops if o.proc == p]

    # relations over ids

    def rb(self, a, b) -> bool:
        return rb(self, a, b)

    def same_session(self, a, b) -> bool:
        return same_session(self, a, b)

    def session_order(self, a, b) -> bool:
        return session_order(self, a, b)

    def succs(self, a) -> set:
        return succs(self, a)

    def rb_pairs(self) -> set:
        return {(a.id, b.id) for a in self.ops for b in self.ops if a.rtime < b.stime}


@dataclass(frozen=True)
class AbstractExecution:
    history: History
    vis: frozenset = frozenset()
    ar: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vis", frozenset(tuple(p) for p in self.vis))
        object.__setattr__(self, "ar", frozenset(tuple(p) for p in self.ar))

    @property
    def meta(self) -> MetaParams:
        return self.history.meta

    @property
    def ops(self) -> tuple:
        return self.history.ops

    def ar_sequence(self) -> list:
        """Operation ids in arbitration order (ar must be a strict total order)."""
        ids = self.history.ids
        rank = {i: sum((j, i) in self.ar for j in ids) for i in ids}
        return sorted(ids, key=lambda i: rank[i])


Model = Union[History, AbstractExecution]


def history_of(model: Model) -> History:
    return model.history if isinstance(model, AbstractExecution) else model


# derived relations ---------------------------------------------------------


def rb(h: History, a, b) -> bool:
    """Returns-before: ``a`` returns strictly before ``b`` starts."""
    return h.op(a).rtime < h.op(b).stime


def same_session(h: History, a, b) -> bool:
    return h.op(a).proc == h.op(b).proc


def session_order(h: History, a, b) -> bool:
    oa, ob = h.op(a), h.op(b)
    return oa.proc == ob.proc and oa.rtime < ob.stime


def direct_successor_on(h: History, a, p) -> Optional[str]:
    """First operation on process ``p`` that starts after ``a`` returns."""
    t = h.op(a).rtime
    best = None
    for o in h.ops:
        if o.proc == p and o.stime > t and (best is None or o.stime < best.stime):
            best = o
    return None if best is None else best.id


def succs(h: History, a) -> set:
    out = set()
    for p in h.meta.processes:
        b = direct_successor_on(h, a, p)
        if b is not None:
            out.add(b)
    return out


def successors_on(h: History, a, p) -> list:
    """All operations of ``p`` starting after ``a`` returns, in start order (b0, b1, ...)."""
    t = h.op(a).rtime
    return [o.id for o in h.ops if o.proc == p and o.stime > t]


# validation ----------------------------------------------------------------


def validate_history(h: History) -> list:
    """Return the list of broken invariants; an empty list means the history is valid."""
    out = [Violation(msg) for msg in h.meta.problems()]
    meta = h.meta
    seen_ids = set()
    for o in h.ops:
        if o.id in seen_ids:
            out.append(Violation("unique operation ids", (o.id,)))
        seen_ids.add(o.id)
        if not o.stime < o.rtime:
            out.append(Violation("stime < rtime", (o.id,)))
        if not o.stime > 0:
            out.append(Violation("stime > 0", (o.id,)))
        if o.proc not in meta.processes:
            out.append(Violation("process in meta", (o.id,)))
        if o.obj not in meta.objects:
            out.append(Violation("object in meta", (o.id,)))
        if o.type not in OP_TYPES:
            out.append(Violation("type is read or write", (o.id,)))
        elif o.type == READ:
            if o.ival is not EMPTY:
                out.append(Violation("read has ival EMPTY", (o.id,)))
            if not (o.oval in (EMPTY, UNDEF) or o.oval in meta.values):
                out.append(Violation("oval in values", (o.id,)))
        else:
            if o.ival not in meta.values or isinstance(o.ival, Special):
                out.append(Violation("write has ival in values", (o.id,)))
            if o.oval not in (EMPTY, UNDEF):
                out.append(Violation("write has oval EMPTY or UNDEF", (o.id,)))
    stamps: dict = {}
    for o in h.ops:
        for t in (o.stime, o.rtime):
            stamps.setdefault(t, []).append(o.id)
    for t, ids in sorted(stamps.items()):
        if len(ids) > 1:
            out.append(Violation("distinct timestamps", tuple(ids)))
    for p in meta.processes:
        mine = [o for o in h.ops if o.proc == p]
        for x, y in zip(mine, mine[1:]):
            if not x.rtime < y.stime:
                out.append(Violation("disjoint intervals per process", (x.id, y.id)))
    return out


def validate_execution(x: AbstractExecution, real_time: bool = True) -> list:
    out = list(validate_history(x.history))
    ids = set(x.history.ids)
    for rel, name in ((x.vis, "vis"), (x.ar, "ar")):
        for a, b in rel:
            if a not in ids or b not in ids:
                out.append(Violation(f"{name} relates known operations", (a, b)))
    if out:
        return out
    idl = x.history.ids
    for a in idl:
        if (a, a) in x.ar:
            out.append(Violation("ar irreflexive", (a,)))
    for i, a in enumerate(idl):
        for b in idl[i + 1:]:
            n = ((a, b) in x.ar) + ((b, a) in x.ar)
            if n != 1:
                out.append(Violation("ar total and antisymmetric", (a, b)))
    if not out and _has_cycle(idl, x.ar):
        out.append(Violation("ar transitive"))
    if _has_cycle(idl, x.vis):
        out.append(Violation("vis acyclic"))
    if real_time:
        h = x.history
        for a, b in sorted(h.rb_pairs()):
            if (a, b) not in x.ar:
                out.append(Violation("rb included in ar", (a, b)))
            if (b, a) in x.vis:
                out.append(Violation("rb(a,b) excludes vis(b,a)", (b, a)))
    return out


def _has_cycle(nodes: Iterable, rel) -> bool:
    succ: dict = {n: [] for n in nodes}
    for a, b in rel:
        succ.setdefault(a, []).append(b)
    state: dict = {}

    def visit(n) -> bool:
        state[n] = 1
        for m in succ.get(n, ()):
            s = state.get(m)
            if s == 1 or (s is None and visit(m)):
                return True
        state[n] = 2
        return False

    return any(state.get(n) is None and visit(n) for n in list(succ))


def check_history(h: History) -> History:
    problems = validate_history(h)
    if problems:
        raise HistoryError(problems)
    return h


def check_execution(x: AbstractExecution, real_time: bool = True) -> AbstractExecution:
    problems = validate_execution(x, real_time=real_time)
    if problems:
        raise HistoryError(problems)
    return x


def is_k_transient(x: AbstractExecution, k: int) -> bool:
    return not k_transience_violations(x, k)


def k_transience_violations(x: AbstractExecution, k: int) -> list:
    """Pairs (a, p) whose visibility to the successive operations of ``p`` is not frozen after k.

    With k = 0 no operation may be visible to any operation it returns before.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    h = x.history
    bad = []
    for a in h.ids:
        for p in h.meta.processes:
            chain = successors_on(h, a, p)
            seen = [(a, b) in x.vis for b in chain]
            if k == 0:
                ok = not any(seen)
            else:
                ok = all(s == seen[k - 1] for s in seen[k:])
            if not ok:
                bad.append((a, p))
    return bad


def canonical_form(model: Model):
    """A renaming-invariant summary: ids by start order, timestamps by rank."""
    h = history_of(model)
    stamps = sorted({t for o in h.ops for t in (o.stime, o.rtime)})
    rank = {t: i + 1 for i, t in enumerate(stamps)}
    names = {o.id: i for i, o in enumerate(h.ops)}
    ops = tuple(
        (o.proc, rank[o.stime], rank[o.rtime], o.type, o.obj, o.ival, o.oval) for o in h.ops
    )
    if isinstance(model, AbstractExecution):
        vis = frozenset((names[a], names[b]) for a, b in model.vis)
        ar = frozenset((names[a], names[b]) for a, b in model.ar)
        return (h.meta, ops, vis, ar)
    return (h.meta, ops)
