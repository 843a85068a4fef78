"""Translate HistMSO formulas into MSO over encoding words.

Operation variables become positions of start letters, set variables become
sets of such positions, and every encoding lane is a free set variable named
after the lane (``A1``, ``T``, ``V1``, ...). Variable names of the source
formula are prefixed (``a_`` for operations, ``S_`` for sets) so they never
clash with lanes or with helper variables, whose names are derived from the
variables they talk about.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import logic as L
from .encoding import BitLayout, to_binary
from .history import EMPTY, UNDEF, WRITE, MetaParams, Special
from .ws1s import formula as W

TRUE, FALSE = W.TRUE, W.FALSE


class TranslationError(ValueError):
    pass


def _fo(name: str) -> str:
    return "a_" + name


def _so(name: str) -> str:
    return "S_" + name


@dataclass
class TranslationContext:
    layout: BitLayout
    _memo: dict = field(default_factory=dict, repr=False)

    @classmethod
    def for_meta(cls, meta: MetaParams, mode: str = "history", k: int = 0) -> "TranslationContext":
        return cls(BitLayout(meta, mode, k))

    @property
    def mode(self) -> str:
        return self.layout.mode

    @property
    def exec_mode(self) -> bool:
        return self.layout.mode == "exec"

    @property
    def lanes(self) -> tuple:
        return self.layout.names

    @property
    def m(self) -> int:
        return self.layout.m

    def _cached(self, key, build):
        f = self._memo.get(key)
        if f is None:
            f = self._memo[key] = build()
        return f

    # lanes ------------------------------------------------------------------

    def act(self, i: int) -> str:
        return self.layout.lanes("active")[i]

    @property
    def type_lane(self) -> str:
        return "T"

    def null(self, x: str) -> W.WordFormula:
        return W.and_(*(W.neg(W.in_(x, l)) for l in self.lanes))

    def act_null(self, x: str) -> W.WordFormula:
        return W.and_(*(W.neg(W.in_(x, self.act(i))) for i in range(self.m)))

    def lanes_equal(self, group: str, x: str, y: str) -> W.WordFormula:
        return W.and_(*(W.iff(W.in_(x, l), W.in_(y, l)) for l in self.layout.lanes(group)))

    def lanes_are(self, group: str, x: str, code: int) -> W.WordFormula:
        lanes = self.layout.lanes(group)
        bits = to_binary(code, len(lanes))
        return W.and_(*(W.in_(x, l) if b else W.neg(W.in_(x, l)) for l, b in zip(lanes, bits)))

    def lanes_in(self, group: str, x: str, codes) -> W.WordFormula:
        width = len(self.layout.lanes(group))
        codes = sorted(set(codes))
        if len(codes) == 1 << width:
            return TRUE
        return W.or_(*(self.lanes_are(group, x, c) for c in codes))

    def is_write(self, x: str) -> W.WordFormula:
        return W.in_(x, self.type_lane)

    # timeline ---------------------------------------------------------------

    def up(self, i: int, x: str) -> W.WordFormula:
        """Process i's lane switches on at x."""

        def build():
            q = f"q_{x}"
            A = self.act(i)
            return W.and_(W.in_(x, A), W.ex1(q, W.and_(W.succ(q, x), W.neg(W.in_(q, A)))))

        return self._cached(("up", i, x), build)

    def down(self, i: int, x: str) -> W.WordFormula:
        def build():
            q = f"q_{x}"
            A = self.act(i)
            return W.and_(W.neg(W.in_(x, A)), W.ex1(q, W.and_(W.succ(q, x), W.in_(q, A))))

        return self._cached(("down", i, x), build)

    def is_start(self, x: str) -> W.WordFormula:
        return self._cached(("start", x), lambda: W.or_(*(self.up(i, x) for i in range(self.m))))

    def is_return(self, x: str) -> W.WordFormula:
        return self._cached(("return", x), lambda: W.or_(*(self.down(i, x) for i in range(self.m))))

    def rtime_on(self, i: int, a: str, r: str) -> W.WordFormula:
        """r is the first position after a where lane i is off."""

        def build():
            z = f"z_{a}_{r}"
            A = self.act(i)
            between = W.all1(z, W.implies(W.and_(W.lt(a, z), W.lt(z, r)), W.in_(z, A)))
            return W.and_(W.lt(a, r), W.neg(W.in_(r, A)), between)

        return self._cached(("rtime_on", i, a, r), build)

    def rtime_of(self, a: str, r: str) -> W.WordFormula:
        """r is the return position of the operation starting at a."""
        return self._cached(
            ("rtime", a, r),
            lambda: W.or_(*(W.and_(self.up(i, a), self.rtime_on(i, a, r)) for i in range(self.m))),
        )

    def ret(self, a: str) -> str:
        return f"r_{a}"

    def rb(self, a: str, b: str) -> W.WordFormula:
        def build():
            r = self.ret(a)
            return W.ex1(r, W.and_(self.rtime_of(a, r), W.lt(r, b)))

        return self._cached(("rb", a, b), build)

    def same_proc(self, a: str, b: str) -> W.WordFormula:
        if a == b:
            return TRUE
        return self._cached(("ss", a, b), lambda: W.or_(*(W.and_(self.up(i, a), self.up(i, b)) for i in range(self.m))))

    def running_at(self, c: str, b: str) -> W.WordFormula:
        """c starts before b and has not returned when b happens."""
        return self._cached(("running", c, b), lambda: W.and_(W.lt(c, b), W.neg(self.rb(c, b))))

    # execution bits -----------------------------------------------------------

    def _pair_bit(self, lane_of_slot, later: str, earlier: str) -> W.WordFormula:
        """Bit stored at ``later`` in the slot of the process of ``earlier``."""
        parts = []
        for i in range(self.m):
            for j in range(self.m):
                if i != j:
                    lane = lane_of_slot(BitLayout.slot(i, j))
                    parts.append(W.and_(self.up(i, later), self.up(j, earlier), W.in_(later, lane)))
        return W.or_(*parts)

    def arc_bit(self, later: str, earlier: str) -> W.WordFormula:
        lanes = self.layout.lanes("arc")
        return self._cached(("arcbit", later, earlier), lambda: self._pair_bit(lambda s: lanes[s], later, earlier))

    def vf_bit(self, later: str, earlier: str) -> W.WordFormula:
        lanes = self.layout.lanes("visc")
        return self._cached(("vfbit", later, earlier), lambda: self._pair_bit(lambda s: lanes[s], later, earlier))

    def vb_bit(self, later: str, earlier: str) -> W.WordFormula:
        lanes = self.layout.lanes("visc")
        off = self.m - 1
        return self._cached(("vbbit", later, earlier), lambda: self._pair_bit(lambda s: lanes[off + s], later, earlier))

    def arc_rel(self, a: str, b: str) -> W.WordFormula:
        """a is arbitrated before b and the two overlap."""
        self._need_exec("arc")
        return self._cached(("arc", a, b), lambda: W.or_(
            W.and_(self.running_at(a, b), W.neg(self.arc_bit(b, a))),
            W.and_(self.running_at(b, a), self.arc_bit(a, b)),
        ))

    def ar(self, a: str, b: str) -> W.WordFormula:
        self._need_exec("ar")
        return self._cached(("ar", a, b), lambda: W.or_(self.rb(a, b), self.arc_rel(a, b)))

    def ar_closure(self, a: str, b: str) -> W.WordFormula:
        """Transitive closure of rb together with the arc pairs, via closed sets."""
        self._need_exec("ar")

        def build():
            S, u, v = f"K_{a}_{b}", f"u_{a}_{b}", f"v_{a}_{b}"

            def step(x, y):
                # only starts stand for operations; other positions must not relay paths
                return W.and_(self.is_start(y), W.or_(self.rb(x, y), self.arc_rel(x, y)))

            closed = W.all1(u, W.all1(v, W.implies(W.and_(W.in_(u, S), step(u, v)), W.in_(v, S))))
            seeded = W.all1(v, W.implies(step(a, v), W.in_(v, S)))
            return W.all2(S, W.implies(W.and_(closed, seeded), W.in_(b, S)))

        return self._cached(("arclosure", a, b), build)

    def visc(self, a: str, b: str) -> W.WordFormula:
        self._need_exec("visc")
        return self._cached(("visc", a, b), lambda: W.or_(
            W.and_(self.running_at(a, b), self.vf_bit(b, a)),
            W.and_(self.running_at(b, a), self.vb_bit(a, b)),
        ))

    def next_on(self, j: int, c: str, b: str) -> W.WordFormula:
        """b is the first start on process j after position c."""

        def build():
            z = f"n_{c}_{b}"
            gap = W.neg(W.ex1(z, W.and_(W.lt(c, z), W.lt(z, b), self.up(j, z))))
            return W.and_(self.up(j, b), W.lt(c, b), gap)

        return self._cached(("next", j, c, b), build)

    def nth_after(self, a: str, b: str, j: int, n: int) -> W.WordFormula:
        """b is the n-th operation (from 0) that process j starts after a returns."""

        def build():
            if n == 0:
                r = self.ret(a)
                return W.ex1(r, W.and_(self.rtime_of(a, r), self.next_on(j, r, b)))
            c = f"c{n}_{a}_{b}"
            return W.ex1(c, W.and_(self.nth_after(a, c, j, n - 1), self.next_on(j, c, b)))

        return self._cached(("nth", a, b, j, n), build)

    def visrb_lane(self, j: int, n: int) -> str:
        return self.layout.lanes("visrb")[j * self.layout.k + n]

    def visrb(self, a: str, b: str) -> W.WordFormula:
        self._need_exec("visrb")
        k = self.layout.k
        if k == 0:
            return FALSE

        def build():
            parts = []
            for j in range(self.m):
                early = [self.nth_after(a, b, j, n) for n in range(k - 1)]
                for n, f in enumerate(early):
                    parts.append(W.and_(f, W.in_(a, self.visrb_lane(j, n))))
                late = W.and_(self.up(j, b), self.rb(a, b), *(W.neg(f) for f in early),
                              W.in_(a, self.visrb_lane(j, k - 1)))
                parts.append(late)
            return W.or_(*parts)

        return self._cached(("visrb", a, b), build)

    def vis(self, a: str, b: str) -> W.WordFormula:
        self._need_exec("vis")
        return self._cached(("vis", a, b), lambda: W.or_(self.visc(a, b), self.visrb(a, b)))

    def _need_exec(self, what: str) -> None:
        if not self.exec_mode:
            raise TranslationError(f"{what} needs an execution-mode layout")


# translation ----------------------------------------------------------------


def translate(phi: L.Formula, ctx: TranslationContext, normalize: bool = True) -> W.WordFormula:
    """Word formula T(phi); free variables of phi stay free (prefixed)."""
    f = L.expand_macros(phi)
    if normalize:
        f = _normalize_bound(f)
    if not ctx.exec_mode and L.uses_exec_relations(f):
        raise TranslationError("vis/ar atoms need an execution-mode layout")
    return _Translator(ctx).tr(f)


def variable_name(var: str, second_order: bool = False) -> str:
    """Name of the word variable standing for a HistMSO variable."""
    return _so(var) if second_order else _fo(var)


def _normalize_bound(f: L.Formula) -> L.Formula:
    """Rename bound variables canonically while leaving free ones alone."""
    fo, so_ = L.free_variables(f)
    if fo or so_:
        return f
    return L.alpha_normalize(f)


class _Translator:
    def __init__(self, ctx: TranslationContext):
        self.ctx = ctx

    def tr(self, f: L.Formula) -> W.WordFormula:
        c = self.ctx
        if isinstance(f, L.Const):
            return TRUE if f.value else FALSE
        if isinstance(f, L.Not):
            return W.neg(self.tr(f.body))
        if isinstance(f, L.And):
            return W.and_(self.tr(f.left), self.tr(f.right))
        if isinstance(f, L.Or):
            return W.or_(self.tr(f.left), self.tr(f.right))
        if isinstance(f, L.Implies):
            return W.implies(self.tr(f.left), self.tr(f.right))
        if isinstance(f, L.Iff):
            return W.iff(self.tr(f.left), self.tr(f.right))
        if isinstance(f, L.Exists):
            x = _fo(f.var)
            return W.ex1(x, W.and_(c.is_start(x), self.tr(f.body)))
        if isinstance(f, L.Forall):
            x = _fo(f.var)
            return W.all1(x, W.implies(c.is_start(x), self.tr(f.body)))
        if isinstance(f, (L.ExistsSet, L.ForallSet)):
            S = _so(f.var)
            y = f"y_{S}"
            guard = W.all1(y, W.implies(W.in_(y, S), c.is_start(y)))
            body = self.tr(f.body)
            if isinstance(f, L.ExistsSet):
                return W.ex2(S, W.and_(guard, body))
            return W.all2(S, W.implies(guard, body))
        if isinstance(f, L.InSet):
            return W.in_(_fo(f.a), _so(f.setvar))
        if isinstance(f, L.Vis):
            return c.vis(_fo(f.a), _fo(f.b))
        if isinstance(f, L.Ar):
            return c.ar(_fo(f.a), _fo(f.b))
        if isinstance(f, L.TimeLt):
            return self.time_lt(f.left, f.right)
        if isinstance(f, L.ProcIs):
            procs = c.layout.meta.processes
            if f.proc not in procs:
                return FALSE
            return c.up(procs.index(f.proc), _fo(f.a))
        if isinstance(f, L.TypeIs):
            w = c.is_write(_fo(f.a))
            return w if f.type == WRITE else W.neg(w)
        if isinstance(f, L.ObjIs):
            objs = c.layout.meta.objects
            if f.obj not in objs:
                return FALSE
            return c.lanes_are("obj", _fo(f.a), objs.index(f.obj))
        if isinstance(f, L.ValIs):
            return self.val_is(_fo(f.a), f.attr, f.value)
        if isinstance(f, L.AttrEq):
            return self.attr_eq(f)
        if isinstance(f, (L.Macro, L.TimeLe, L.Finite)):
            return self.tr(L.expand_macros(f))
        raise TranslationError(f"cannot translate {f!r}")

    # time -------------------------------------------------------------------

    def _time_pos(self, t: L.Time):
        """(position variable, defining formula or None)."""
        x = _fo(t.var)
        if t.attr == "stime":
            return x, None
        r = self.ctx.ret(x)
        return r, self.ctx.rtime_of(x, r)

    def _with_times(self, times, body_fn) -> W.WordFormula:
        positions, defs, bound = [], [], []
        for t in times:
            p, d = self._time_pos(t)
            positions.append(p)
            if d is not None and p not in bound:
                defs.append(d)
                bound.append(p)
        return W.ex1s(bound, W.and_(*defs, body_fn(*positions)))

    def time_lt(self, left: L.Time, right: L.Time) -> W.WordFormula:
        if left == right:
            return FALSE
        return self._with_times((left, right), W.lt)

    def time_eq(self, left: L.Time, right: L.Time) -> W.WordFormula:
        if left == right:
            return TRUE
        return self._with_times((left, right), W.eq)

    # values -------------------------------------------------------------------

    def _oval_code_is(self, x: str, code: int) -> W.WordFormula:
        c = self.ctx
        read_part = W.and_(W.neg(c.is_write(x)), c.lanes_are("val", x, code))
        if code < len(c.layout.meta.values):
            return read_part
        r = c.ret(x)
        write_part = W.and_(c.is_write(x), W.ex1(r, W.and_(c.rtime_of(x, r), c.lanes_are("val", r, code))))
        return W.or_(read_part, write_part)

    def val_is(self, x: str, attr: str, value) -> W.WordFormula:
        c = self.ctx
        lay = c.layout
        if not isinstance(value, Special) and value not in lay.meta.values:
            return FALSE
        if attr == "ival":
            if value is EMPTY:
                return W.neg(c.is_write(x))
            if value is UNDEF:
                return FALSE
            return W.and_(c.is_write(x), c.lanes_are("val", x, lay.value_code(value)))
        return self._oval_code_is(x, lay.value_code(value))

    def attr_eq(self, f: L.AttrEq) -> W.WordFormula:
        c = self.ctx
        kind = L.ATTR_KIND[f.attr_a]
        a, b = _fo(f.a), _fo(f.b)
        if kind == "time":
            return self.time_eq(L.Time(f.a, f.attr_a), L.Time(f.b, f.attr_b))
        if f.a == f.b and f.attr_a == f.attr_b:
            return TRUE
        if kind == "proc":
            return c.same_proc(a, b)
        if kind == "type":
            return W.iff(c.is_write(a), c.is_write(b))
        if kind == "obj":
            return c.lanes_equal("obj", a, b)
        return self.value_eq(a, f.attr_a, b, f.attr_b)

    def value_eq(self, a: str, attr_a: str, b: str, attr_b: str) -> W.WordFormula:
        c = self.ctx
        Wa, Wb = c.is_write(a), c.is_write(b)
        Ra, Rb = W.neg(Wa), W.neg(Wb)
        same = lambda x, y: c.lanes_equal("val", x, y)  # noqa: E731
        if attr_a == "oval" and attr_b == "ival":
            a, attr_a, b, attr_b = b, attr_b, a, attr_a
            Wa, Wb, Ra, Rb = Wb, Wa, Rb, Ra
        if attr_a == "ival" and attr_b == "ival":
            return W.or_(W.and_(Ra, Rb), W.and_(Wa, Wb, same(a, b)))
        if attr_a == "ival":
            # a.ival = b.oval: EMPTY on both sides, or a write's input equal to a read's output
            empty = self._oval_code_is(b, c.layout.empty_code)
            return W.or_(W.and_(Ra, empty), W.and_(Wa, Rb, same(a, b)))
        ra, rb_ = c.ret(a), c.ret(b)
        return W.or_(
            W.and_(Ra, Rb, same(a, b)),
            W.and_(Wa, Wb, W.ex1s((ra, rb_), W.and_(c.rtime_of(a, ra), c.rtime_of(b, rb_), same(ra, rb_)))),
            W.and_(Ra, Wb, W.ex1(rb_, W.and_(c.rtime_of(b, rb_), same(a, rb_)))),
            W.and_(Wa, Rb, W.ex1(ra, W.and_(c.rtime_of(a, ra), same(ra, b)))),
        )


# well-formedness of words ------------------------------------------------------


def is_encoding(ctx: TranslationContext) -> W.WordFormula:
    """Word formula satisfied exactly by encodings (possibly followed by null letters)."""
    return ctx._cached(("is_encoding",), lambda: W.and_(*encoding_clauses(ctx).values()))


def encoding_clauses(ctx: TranslationContext) -> dict:
    """The conjuncts of the well-formedness formula, by name."""
    lay = ctx.layout
    m = ctx.m
    x, y, z, a, r = "e_x", "e_y", "e_z", "e_a", "e_r"
    out = {}
    out["null first letter"] = W.and_(W.ex1(x, W.first(x)), W.all1(x, W.implies(W.first(x), ctx.null(x))))

    def flip(i):
        return W.and_(W.iff(W.in_(x, ctx.act(i)), W.neg(W.in_(y, ctx.act(i)))),
                      *(W.iff(W.in_(x, ctx.act(j)), W.in_(y, ctx.act(j))) for j in range(m) if j != i))

    padding = W.and_(ctx.act_null(x), W.all1(z, W.implies(W.lt(x, z), ctx.null(z))))
    out["one lane flips per step"] = W.all1(x, W.all1(y, W.implies(
        W.succ(x, y), W.or_(*(flip(i) for i in range(m)), padding))))
    out["every operation returns"] = W.all1(a, W.implies(ctx.is_start(a), W.ex1(r, ctx.rtime_of(a, r))))
    if lay.mode == "timeline":
        out["no attribute lanes"] = TRUE
        return out

    nvals = len(lay.meta.values)
    values = range(nvals)
    specials = (lay.empty_code, lay.undef_code)
    objs = range(len(lay.meta.objects))
    wr = ctx.is_write(a)
    attrs = W.and_(
        W.iff(wr, W.in_(r, ctx.type_lane)),
        ctx.lanes_equal("obj", a, r),
        ctx.lanes_in("obj", a, objs),
        W.implies(wr, W.and_(ctx.lanes_in("val", a, values), ctx.lanes_in("val", r, specials))),
        W.implies(W.neg(wr), W.and_(ctx.lanes_in("val", a, list(values) + list(specials)),
                                    ctx.lanes_equal("val", a, r))),
    )
    out["attributes agree at start and return"] = W.all1(a, W.implies(
        ctx.is_start(a), W.all1(r, W.implies(ctx.rtime_of(a, r), attrs))))
    if lay.mode != "exec":
        return out

    exec_lanes = lay.lanes("arc") + lay.lanes("visc") + lay.lanes("visrb")
    out["execution lanes only at starts"] = W.all1(x, W.implies(
        W.neg(ctx.is_start(x)), W.and_(*(W.neg(W.in_(x, l)) for l in exec_lanes))))
    arc, visc = lay.lanes("arc"), lay.lanes("visc")
    per_proc = []
    for i in range(m):
        slots = []
        for j in range(m):
            if j == i:
                continue
            s = BitLayout.slot(i, j)
            bits = (arc[s], visc[s], visc[m - 1 + s])
            idle = W.implies(W.neg(W.in_(x, ctx.act(j))), W.and_(*(W.neg(W.in_(x, l)) for l in bits)))
            one_way = W.neg(W.and_(W.in_(x, bits[1]), W.in_(x, bits[2])))
            slots.append(W.and_(idle, one_way))
        per_proc.append(W.implies(ctx.up(i, x), W.and_(*slots)))
    out["overlap bits only for running operations"] = W.all1(x, W.and_(*per_proc))
    if lay.k:
        b = "e_b"
        need = [W.implies(W.in_(a, ctx.visrb_lane(j, n)), W.ex1(b, ctx.nth_after(a, b, j, n)))
                for j in range(m) for n in range(lay.k)]
        out["successor bits only for existing successors"] = W.all1(a, W.implies(ctx.is_start(a), W.and_(*need)))
    c3 = ("e_p", "e_q", "e_s")
    p, q, s = c3
    starts = W.and_(ctx.is_start(p), ctx.is_start(q), ctx.is_start(s))
    cycle = W.and_(ctx.ar(p, q), ctx.ar(q, s), ctx.ar(s, p))
    out["arbitration acyclic"] = W.all1s(c3, W.implies(starts, W.neg(cycle)))
    S = "e_S"
    nonempty = W.ex1(q, W.in_(q, S))
    inside = W.all1(q, W.implies(W.in_(q, S), ctx.is_start(q)))
    fed = W.all1(q, W.implies(W.in_(q, S), W.ex1(p, W.and_(W.in_(p, S), ctx.vis(p, q)))))
    out["visibility acyclic"] = W.neg(W.ex2(S, W.and_(nonempty, inside, fed)))
    return out


def word_domain(ctx: TranslationContext) -> W.WordFormula:
    """The timeline discipline alone: a cheap superset of the encodings.

    Used as the engine domain so intermediate automata only consider words
    shaped like encodings.
    """
    clauses = encoding_clauses(ctx)
    return W.and_(clauses["null first letter"], clauses["one lane flips per step"])


def make_engine(ctx: TranslationContext, state_cap: Optional[int] = None):
    """Engine over the lanes of ``ctx`` relativized to encoding-shaped words."""
    from .ws1s import Engine
    from .ws1s.automaton import DEFAULT_STATE_CAP

    return Engine(ctx.lanes, state_cap or DEFAULT_STATE_CAP, domain=word_domain(ctx))


def derived_relations(ctx: TranslationContext) -> dict:
    """Named word formulas over the position variables ``x`` (and ``y``)."""
    x, y = "x", "y"
    out = {
        "isStart": ctx.is_start(x),
        "isReturn": ctx.is_return(x),
        "rtimeOf": ctx.rtime_of(x, y),
        "rb": ctx.rb(x, y),
        "ss": ctx.same_proc(x, y),
        "so": W.and_(ctx.same_proc(x, y), ctx.rb(x, y)),
    }
    for i, p in enumerate(ctx.layout.meta.processes):
        out[f"procOf[{p}]"] = ctx.up(i, x)
    if ctx.exec_mode:
        out.update({
            "arc": ctx.arc_rel(x, y),
            "visc": ctx.visc(x, y),
            "visrb": ctx.visrb(x, y),
            "ar": ctx.ar(x, y),
            "ar_closure": ctx.ar_closure(x, y),
            "vis": ctx.vis(x, y),
        })
    return out


def layout_for(meta: MetaParams, exec_mode: bool = False, k: int = 0) -> BitLayout:
    return BitLayout(meta, "exec" if exec_mode else "history", k)


__all__ = [
    "TranslationContext",
    "TranslationError",
    "derived_relations",
    "encoding_clauses",
    "is_encoding",
    "layout_for",
    "make_engine",
    "word_domain",
    "translate",
    "variable_name",
]
