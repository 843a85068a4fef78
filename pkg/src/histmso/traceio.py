"""Trace files, JSON traces, and seeded random histories and executions.

Text format::

    processes p1 p2
    objects x
    values v1 v2
    op a p1 1 4 write x ival=v1 oval=_
    op b p2 2 3/2 read x ival=_ oval=v1     # rationals as num/den or decimals
    vis a b
    ar a b
    exec                                     # optional: execution without relation lines

Missing header lines are inferred from the operations.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .history import (
    EMPTY,
    READ,
    UNDEF,
    WRITE,
    AbstractExecution,
    History,
    HistoryError,
    MetaParams,
    Model,
    Operation,
    Special,
    check_execution,
    check_history,
    history_of,
    successors_on,
    validate_execution,
    validate_history,
)

DEFAULT_META = MetaParams(("p1",), ("x",), ("v1",))


class TraceSyntaxError(ValueError):
    def __init__(self, line: int, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}")


# values and timestamps --------------------------------------------------------


def _parse_value(text: str):
    if text == "_":
        return EMPTY
    if text == "undef":
        return UNDEF
    return text


def _fmt_value(v) -> str:
    return v.value if isinstance(v, Special) else str(v)


def parse_time(text: str) -> Fraction:
    try:
        t = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"bad timestamp {text!r}") from None
    return t


def format_time(t: Fraction) -> str:
    t = Fraction(t)
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


# text format ------------------------------------------------------------------


def parse_trace(text: str, validate: bool = True) -> Model:
    """Parse a trace; relation lines or an ``exec`` line make it an execution."""
    headers: dict = {}
    ops: list = []
    vis: list = []
    ar: list = []
    is_exec = False
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key in ("processes", "objects", "values"):
            if key in headers:
                raise TraceSyntaxError(n, f"duplicate {key} line")
            headers[key] = tuple(parts[1:])
        elif key == "op":
            ops.append(_parse_op(n, parts))
        elif key in ("vis", "ar"):
            if len(parts) != 3:
                raise TraceSyntaxError(n, f"expected '{key} <id> <id>'")
            (vis if key == "vis" else ar).append((parts[1], parts[2]))
            is_exec = True
        elif key == "exec":
            if len(parts) != 1:
                raise TraceSyntaxError(n, "'exec' takes no arguments")
            is_exec = True
        else:
            raise TraceSyntaxError(n, f"unknown directive {key!r}")
    meta = _meta(headers, ops)
    return _build(meta, ops, vis, ar, is_exec, validate)


def _parse_op(n: int, parts: list) -> Operation:
    if len(parts) != 9:
        raise TraceSyntaxError(n, "expected 'op <id> <proc> <stime> <rtime> <type> <obj> ival=<v> oval=<v>'")
    _, op_id, proc, s, r, typ, obj, iv, ov = parts
    if typ not in (READ, WRITE):
        raise TraceSyntaxError(n, f"unknown operation type {typ!r}")
    if not iv.startswith("ival=") or not ov.startswith("oval="):
        raise TraceSyntaxError(n, "expected ival=... oval=...")
    try:
        stime, rtime = parse_time(s), parse_time(r)
    except ValueError as e:
        raise TraceSyntaxError(n, str(e)) from None
    return Operation(op_id, proc, stime, rtime, typ, obj, _parse_value(iv[5:]), _parse_value(ov[5:]))


def _meta(headers: dict, ops: list) -> MetaParams:
    def first_seen(items) -> tuple:
        return tuple(dict.fromkeys(items))

    procs = headers.get("processes") or first_seen(o.proc for o in ops) or DEFAULT_META.processes
    objs = headers.get("objects") or first_seen(o.obj for o in ops) or DEFAULT_META.objects
    vals = headers.get("values")
    if not vals:
        vals = first_seen(v for o in ops for v in (o.ival, o.oval) if not isinstance(v, Special))
        vals = vals or DEFAULT_META.values
    return MetaParams(procs, objs, vals)


def _build(meta, ops, vis, ar, is_exec, validate) -> Model:
    h = History(meta, tuple(ops))
    if not is_exec:
        return check_history(h) if validate else h
    x = AbstractExecution(h, frozenset(vis), frozenset(ar))
    if validate:
        # real-time discipline is a property checked by models, not a parse error
        check_execution(x, real_time=False)
    return x


def serialize_trace(model: Model) -> str:
    h = history_of(model)
    meta = h.meta
    lines = [
        "processes " + " ".join(meta.processes),
        "objects " + " ".join(meta.objects),
        "values " + " ".join(map(str, meta.values)),
    ]
    for o in h.ops:
        lines.append(
            f"op {o.id} {o.proc} {format_time(o.stime)} {format_time(o.rtime)} {o.type} {o.obj} "
            f"ival={_fmt_value(o.ival)} oval={_fmt_value(o.oval)}"
        )
    if isinstance(model, AbstractExecution):
        lines.append("exec")
        order = {i: n for n, i in enumerate(h.ids)}
        for name, rel in (("vis", model.vis), ("ar", model.ar)):
            for a, b in sorted(rel, key=lambda p: (order[p[0]], order[p[1]])):
                lines.append(f"{name} {a} {b}")
    return "\n".join(lines) + "\n"


# JSON -------------------------------------------------------------------------


def to_json(model: Model) -> dict:
    h = history_of(model)
    out = {
        "processes": list(h.meta.processes),
        "objects": list(h.meta.objects),
        "values": list(h.meta.values),
        "ops": [
            {
                "id": o.id, "proc": o.proc, "stime": format_time(o.stime), "rtime": format_time(o.rtime),
                "type": o.type, "obj": o.obj, "ival": _fmt_value(o.ival), "oval": _fmt_value(o.oval),
            }
            for o in h.ops
        ],
    }
    if isinstance(model, AbstractExecution):
        order = {i: n for n, i in enumerate(h.ids)}
        key = lambda p: (order[p[0]], order[p[1]])  # noqa: E731
        out["exec"] = True
        out["vis"] = [list(p) for p in sorted(model.vis, key=key)]
        out["ar"] = [list(p) for p in sorted(model.ar, key=key)]
    return out


def from_json(data: Union[dict, str], validate: bool = True) -> Model:
    if isinstance(data, str):
        data = json.loads(data)
    ops = [
        Operation(d["id"], d["proc"], parse_time(str(d["stime"])), parse_time(str(d["rtime"])), d["type"],
                  d["obj"], _parse_value(d.get("ival", "_")), _parse_value(d.get("oval", "_")))
        for d in data.get("ops", [])
    ]
    headers = {k: tuple(data[k]) for k in ("processes", "objects", "values") if data.get(k)}
    meta = _meta(headers, ops)
    vis = [tuple(p) for p in data.get("vis", [])]
    ar = [tuple(p) for p in data.get("ar", [])]
    is_exec = bool(data.get("exec")) or bool(vis) or bool(ar)
    return _build(meta, ops, vis, ar, is_exec, validate)


def load_trace(path: str, validate: bool = True) -> Model:
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        return from_json(text, validate)
    return parse_trace(text, validate)


def save_trace(model: Model, path: str) -> None:
    with open(path, "w") as fh:
        if path.endswith(".json"):
            json.dump(to_json(model), fh, indent=2)
            fh.write("\n")
        else:
            fh.write(serialize_trace(model))


# generators -------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    num_procs: int = 2
    num_ops: int = 4
    num_objects: int = 1
    num_values: int = 2
    exec_mode: bool = False
    k: int = 1
    overlap: float = 0.5
    vis_density: float = 0.5
    read_ratio: float = 0.5
    undef_prob: float = 0.1
    consistent_reads: bool = False

    def problems(self) -> list:
        out = []
        for name in ("num_procs", "num_objects", "num_values"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be at least 1")
        if self.num_ops < 0:
            out.append("num_ops must be non-negative")
        if self.k < 0:
            out.append("k must be non-negative")
        for name in ("overlap", "vis_density", "read_ratio", "undef_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append(f"{name} must lie in [0, 1]")
        return out

    def meta(self) -> MetaParams:
        return MetaParams(
            tuple(f"p{i}" for i in range(1, self.num_procs + 1)),
            tuple(chr(ord("x") + i) if i < 3 else f"o{i}" for i in range(self.num_objects)),
            tuple(f"v{i}" for i in range(1, self.num_values + 1)),
        )


def _check_config(cfg: GeneratorConfig) -> None:
    problems = cfg.problems()
    if problems:
        raise ValueError("; ".join(problems))


def gen_history(cfg: GeneratorConfig, rng: Optional[random.Random] = None) -> History:
    """Random valid history, built by simulating a timeline.

    Each step either starts an operation on an idle process or returns a
    running one, and gets the next integer timestamp, so timestamps are
    distinct and each process runs one operation at a time.
    """
    _check_config(cfg)
    rng = rng or random.Random(cfg.seed)
    meta = cfg.meta()
    procs = meta.processes
    running: dict = {}
    pending: list = []  # (id, proc, stime)
    started = 0
    t = 0
    ops: list = []
    while started < cfg.num_ops or running:
        t += 1
        idle = [p for p in procs if p not in running]
        can_start = started < cfg.num_ops and idle
        if can_start and (not running or rng.random() < cfg.overlap):
            p = rng.choice(idle)
            started += 1
            running[p] = (f"o{started}", t)
        else:
            p = rng.choice(sorted(running))
            op_id, s = running.pop(p)
            pending.append((op_id, p, s, t))
    for op_id, p, s, r in sorted(pending, key=lambda e: int(e[0][1:])):
        ops.append(_random_op(cfg, rng, meta, op_id, p, s, r))
    return History(meta, tuple(ops))


def _random_op(cfg, rng, meta, op_id, p, s, r) -> Operation:
    obj = rng.choice(meta.objects)
    if rng.random() < cfg.read_ratio:
        pool = list(meta.values) + [EMPTY]
        oval = UNDEF if rng.random() < cfg.undef_prob else rng.choice(pool)
        return Operation(op_id, p, s, r, READ, obj, EMPTY, oval)
    oval = UNDEF if rng.random() < cfg.undef_prob else EMPTY
    return Operation(op_id, p, s, r, WRITE, obj, rng.choice(meta.values), oval)


def linear_extension(h: History, rng: random.Random, exact_limit: int = 18) -> list:
    """Uniformly random linear extension of returns-before (ids in order).

    Counting is exact over down-sets for up to ``exact_limit`` operations;
    larger histories fall back to a random topological sort, which is not uniform.
    """
    ids = h.ids
    n = len(ids)
    pos = {i: k for k, i in enumerate(ids)}
    preds = [0] * n
    for a, b in h.rb_pairs():
        preds[pos[b]] |= 1 << pos[a]
    full = (1 << n) - 1
    if n > exact_limit:
        placed, out = 0, []
        while placed != full:
            ready = [k for k in range(n) if not placed >> k & 1 and preds[k] & ~placed == 0]
            k = rng.choice(ready)
            placed |= 1 << k
            out.append(ids[k])
        return out
    memo = {full: 1}

    def count(placed: int) -> int:
        c = memo.get(placed)
        if c is None:
            c = sum(count(placed | 1 << k) for k in range(n)
                    if not placed >> k & 1 and preds[k] & ~placed == 0)
            memo[placed] = c
        return c

    placed, out = 0, []
    while placed != full:
        ready = [k for k in range(n) if not placed >> k & 1 and preds[k] & ~placed == 0]
        weights = [count(placed | 1 << k) for k in ready]
        k = rng.choices(ready, weights)[0]
        placed |= 1 << k
        out.append(ids[k])
    return out


def order_relation(seq: list) -> frozenset:
    return frozenset((a, b) for i, a in enumerate(seq) for b in seq[i + 1:])


def freeze_visibility(h: History, vis: set, k: int) -> set:
    """Make visibility k-transient: past the (k-1)-th successor on a process,
    repeat the visibility to that successor (drop it altogether when k = 0)."""
    vis = set(vis)
    for a in h.ids:
        for p in h.meta.processes:
            chain = successors_on(h, a, p)
            if k == 0:
                vis.difference_update((a, b) for b in chain)
                continue
            if len(chain) <= k:
                continue
            keep = (a, chain[k - 1]) in vis
            for b in chain[k:]:
                (vis.add if keep else vis.discard)((a, b))
    return vis


def gen_exec(cfg: GeneratorConfig, rng: Optional[random.Random] = None) -> AbstractExecution:
    """Random real-time, k-transient abstract execution.

    Arbitration is a uniform linear extension of returns-before. Visibility
    is drawn inside a second, independent linear extension (so it is acyclic
    and never points backwards in real time), then frozen for k-transience.
    """
    _check_config(cfg)
    rng = rng or random.Random(cfg.seed)
    h = gen_history(cfg, rng)
    ar_seq = linear_extension(h, rng)
    vis_seq = linear_extension(h, rng)
    vis = {(a, b) for a, b in order_relation(vis_seq) if rng.random() < cfg.vis_density}
    vis = freeze_visibility(h, vis, cfg.k)
    if cfg.consistent_reads:
        h = _consistent_reads(h, vis, ar_seq)
    return AbstractExecution(h, frozenset(vis), order_relation(ar_seq))


def _consistent_reads(h: History, vis: set, ar_seq: list) -> History:
    """Give every read the value of the arbitration-last visible write on its object."""
    rank = {i: n for n, i in enumerate(ar_seq)}
    ops = []
    for o in h.ops:
        if o.type == READ:
            ctx = [w for w in h.ops if w.type == WRITE and w.obj == o.obj and (w.id, o.id) in vis]
            val = max(ctx, key=lambda w: rank[w.id]).ival if ctx else EMPTY
            o = Operation(o.id, o.proc, o.stime, o.rtime, o.type, o.obj, EMPTY, val)
        ops.append(o)
    return History(h.meta, tuple(ops))


# fixtures -----------------------------------------------------------------------


def fixture_dir() -> str:
    import os

    return os.path.join(os.path.dirname(__file__), "fixtures")


def load_fixture(name: str) -> Model:
    import os

    return load_trace(os.path.join(fixture_dir(), f"{name}.trace"))


def fixture_manifest() -> dict:
    import os

    with open(os.path.join(fixture_dir(), "manifest.json")) as fh:
        return json.load(fh)


__all__ = [
    "GeneratorConfig",
    "TraceSyntaxError",
    "fixture_dir",
    "fixture_manifest",
    "format_time",
    "freeze_visibility",
    "from_json",
    "gen_exec",
    "gen_history",
    "linear_extension",
    "load_fixture",
    "load_trace",
    "order_relation",
    "parse_time",
    "parse_trace",
    "save_trace",
    "serialize_trace",
    "to_json",
    "validate_execution",
    "validate_history",
    "HistoryError",
]
