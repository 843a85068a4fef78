"""Bit-vector word encodings of histories and abstract executions.

A word has one letter per event (start or return of an operation) after a
leading null letter. Lane groups, in order:

    active  one bit per process, set while that process runs an operation
    type    0 for read, 1 for write
    val     value code; values are indexed from 0, EMPTY and UNDEF take the
            two top codes of the lane
    obj     object index
    arc     exec mode, at a start b: for each other process j whose current
            operation c overlaps b, 1 iff b is arbitrated before c
    visc    exec mode, at a start b, per other process j with a current
            operation c: VF (c visible to b) then VB (b visible to c)
    visrb   exec mode, at a start a: slot (p, i) says whether a is visible to
            the i-th operation that p starts after a returns; slot k-1
            stands for every later one as well

Value lanes: a write carries its ival at its start letter and its oval at
its return letter; a read carries its oval at both letters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from .history import (
    EMPTY,
    READ,
    UNDEF,
    WRITE,
    AbstractExecution,
    History,
    HistoryError,
    MetaParams,
    Operation,
    Special,
    check_execution,
    check_history,
    k_transience_violations,
    successors_on,
)

MODES = ("timeline", "history", "exec")


class EncodingError(ValueError):
    pass


def _bits(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0


@dataclass(frozen=True)
class BitLayout:
    meta: MetaParams
    mode: str = "history"
    k: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise EncodingError(f"unknown encoding mode {self.mode!r}")
        if self.k < 0:
            raise EncodingError("k must be non-negative")

    @property
    def m(self) -> int:
        return len(self.meta.processes)

    @property
    def val_width(self) -> int:
        return _bits(len(self.meta.values) + 2)

    @property
    def obj_width(self) -> int:
        return _bits(len(self.meta.objects))

    @cached_property
    def groups(self) -> tuple:
        """(group name, lane names) in lane order."""
        m = self.m
        out = [("active", tuple(f"A{i}" for i in range(1, m + 1)))]
        if self.mode == "timeline":
            return tuple(out)
        out.append(("type", ("T",)))
        out.append(("val", tuple(f"V{i}" for i in range(1, self.val_width + 1))))
        out.append(("obj", tuple(f"O{i}" for i in range(1, self.obj_width + 1))))
        if self.mode == "exec":
            out.append(("arc", tuple(f"C{j}" for j in range(1, m))))
            out.append(("visc", tuple(f"VF{j}" for j in range(1, m)) + tuple(f"VB{j}" for j in range(1, m))))
            out.append(("visrb", tuple(f"R{p}_{i}" for p in range(1, m + 1) for i in range(self.k))))
        return tuple(out)

    @cached_property
    def names(self) -> tuple:
        return tuple(n for _, lanes in self.groups for n in lanes)

    @property
    def width(self) -> int:
        return len(self.names)

    @cached_property
    def offset(self) -> dict:
        out, pos = {}, 0
        for g, lanes in self.groups:
            out[g] = pos
            pos += len(lanes)
        return out

    def lanes(self, group: str) -> tuple:
        return dict(self.groups).get(group, ())

    # codes ----------------------------------------------------------------

    @property
    def empty_code(self) -> int:
        return (1 << self.val_width) - 2

    @property
    def undef_code(self) -> int:
        return (1 << self.val_width) - 1

    def value_code(self, v) -> int:
        if v is EMPTY:
            return self.empty_code
        if v is UNDEF:
            return self.undef_code
        try:
            return self.meta.values.index(v)
        except ValueError:
            raise EncodingError(f"value {v!r} not in meta values") from None

    def code_value(self, code: int):
        if code == self.empty_code:
            return EMPTY
        if code == self.undef_code:
            return UNDEF
        if 0 <= code < len(self.meta.values):
            return self.meta.values[code]
        raise EncodingError(f"invalid value code {code}")

    def obj_code(self, o) -> int:
        try:
            return self.meta.objects.index(o)
        except ValueError:
            raise EncodingError(f"object {o!r} not in meta objects") from None

    @staticmethod
    def slot(i: int, j: int) -> int:
        """0-based slot of process j in the per-start lanes of an operation on process i (i != j)."""
        return j if j < i else j - 1

    @staticmethod
    def slot_process(i: int, s: int) -> int:
        return s if s < i else s + 1

    def header(self) -> str:
        meta = self.meta
        parts = [f"wordmodel {self.mode} k={self.k}",
                 "processes " + " ".join(map(str, meta.processes)),
                 "objects " + " ".join(map(str, meta.objects)),
                 "values " + " ".join(map(str, meta.values)),
                 "lanes " + " ".join(f"{g}:{len(lanes)}" for g, lanes in self.groups)]
        return "\n".join(parts)


def to_binary(code: int, width: int) -> list:
    if code >> width:
        raise EncodingError(f"code {code} does not fit in {width} bits")
    return [(code >> (width - 1 - i)) & 1 for i in range(width)]


def from_binary(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


@dataclass(frozen=True)
class WordModel:
    layout: BitLayout
    letters: tuple
    event_index: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(tuple(int(b) for b in l) for l in self.letters))
        object.__setattr__(self, "event_index", tuple(self.event_index))
        for l in self.letters:
            if len(l) != self.layout.width:
                raise EncodingError(f"letter width {len(l)} differs from layout width {self.layout.width}")

    def __len__(self) -> int:
        return len(self.letters)

    def lane(self, group: str) -> list:
        """Per-position bit tuples of one lane group."""
        off = self.layout.offset[group]
        w = len(self.layout.lanes(group))
        return [l[off:off + w] for l in self.letters]

    def restrict(self, group: str) -> list:
        return [list(x) for x in self.lane(group)]

    def as_tracks(self, order: Sequence[str]) -> list:
        """Letters reordered to the given lane-name order."""
        pos = {n: i for i, n in enumerate(self.layout.names)}
        idx = [pos[n] for n in order]
        return [tuple(l[i] for i in idx) for l in self.letters]

    def serialize(self) -> str:
        lines = [self.layout.header()]
        for i, letter in enumerate(self.letters):
            chunks, pos = [], 0
            for _, lanes in self.layout.groups:
                chunks.append("".join(map(str, letter[pos:pos + len(lanes)])))
                pos += len(lanes)
            line = "|".join(chunks)
            if i < len(self.event_index) and self.event_index[i] is not None:
                op_id, kind = self.event_index[i]
                line += f" {op_id} {kind}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def parse_word_model(text: str) -> WordModel:
    lines = [l for l in text.splitlines() if l.strip()]
    if len(lines) < 5 or not lines[0].startswith("wordmodel "):
        raise EncodingError("missing wordmodel header")
    head = lines[0].split()
    mode = head[1]
    k = int(head[2].split("=", 1)[1])

    def items(line: str, key: str) -> tuple:
        parts = line.split()
        if not parts or parts[0] != key:
            raise EncodingError(f"expected {key!r} header line")
        return tuple(parts[1:])

    meta = MetaParams(items(lines[1], "processes"), items(lines[2], "objects"), items(lines[3], "values"))
    layout = BitLayout(meta, mode, k)
    declared = items(lines[4], "lanes")
    expected = tuple(f"{g}:{len(l)}" for g, l in layout.groups)
    if declared != expected:
        raise EncodingError(f"lane header {declared} does not match layout {expected}")
    letters, events = [], []
    for n, line in enumerate(lines[5:], start=6):
        parts = line.split()
        bits = parts[0].replace("|", "")
        if set(bits) - {"0", "1"} or len(bits) != layout.width:
            raise EncodingError(f"line {n}: malformed letter {parts[0]!r}")
        letters.append(tuple(int(c) for c in bits))
        events.append((parts[1], parts[2]) if len(parts) >= 3 else None)
    return WordModel(layout, tuple(letters), tuple(events) if any(events) else ())


# encoding ------------------------------------------------------------------


def _events(h: History) -> list:
    ev = [(o.stime, o.id, "start") for o in h.ops] + [(o.rtime, o.id, "return") for o in h.ops]
    ev.sort(key=lambda e: e[0])
    return ev


def _encode(h: History, layout: BitLayout, x: Optional[AbstractExecution] = None) -> WordModel:
    meta = h.meta
    pidx = {p: i for i, p in enumerate(meta.processes)}
    off = layout.offset
    active = [0] * layout.m
    current: list = [None] * layout.m  # operation currently running on each process
    letters = [tuple([0] * layout.width)]
    index: list = [None]
    for _, op_id, kind in _events(h):
        o = h.op(op_id)
        i = pidx[o.proc]
        letter = [0] * layout.width
        active[i] = 1 if kind == "start" else 0
        letter[0:layout.m] = active
        if layout.mode != "timeline":
            letter[off["type"]] = 1 if o.type == WRITE else 0
            if o.type == WRITE:
                v = o.ival if kind == "start" else o.oval
            else:
                v = o.oval
            vw = layout.val_width
            letter[off["val"]:off["val"] + vw] = to_binary(layout.value_code(v), vw)
            ow = layout.obj_width
            letter[off["obj"]:off["obj"] + ow] = to_binary(layout.obj_code(o.obj), ow)
            if x is not None and kind == "start":
                _exec_bits(x, layout, o, i, current, letter)
        current[i] = op_id if kind == "start" else None
        letters.append(tuple(letter))
        index.append((op_id, kind))
    return WordModel(layout, tuple(letters), tuple(index))


def _exec_bits(x: AbstractExecution, layout: BitLayout, o: Operation, i: int, current: list, letter: list) -> None:
    m = layout.m
    off = layout.offset
    for j in range(m):
        c = current[j]
        if j == i or c is None:
            continue
        s = layout.slot(i, j)
        letter[off["arc"] + s] = 1 if (o.id, c) in x.ar else 0
        letter[off["visc"] + s] = 1 if (c, o.id) in x.vis else 0
        letter[off["visc"] + (m - 1) + s] = 1 if (o.id, c) in x.vis else 0
    if layout.k:
        h = x.history
        for p, proc in enumerate(h.meta.processes):
            chain = successors_on(h, o.id, proc)
            for n in range(layout.k):
                if n < len(chain):
                    letter[off["visrb"] + p * layout.k + n] = 1 if (o.id, chain[n]) in x.vis else 0


def encode_timeline(h: History) -> WordModel:
    check_history(h)
    return _encode(h, BitLayout(h.meta, "timeline"))


def encode(h: History) -> WordModel:
    check_history(h)
    return _encode(h, BitLayout(h.meta, "history"))


def encode_exec(x: AbstractExecution, k: int) -> WordModel:
    if k < 0:
        raise EncodingError("k must be non-negative")
    try:
        check_execution(x, real_time=True)
    except HistoryError as e:
        raise EncodingError(f"not a real-time abstract execution: {e}") from None
    bad = k_transience_violations(x, k)
    if bad:
        a, p = bad[0]
        raise EncodingError(f"visibility of {a} to process {p} is not {k}-transient")
    return _encode(x.history, BitLayout(x.history.meta, "exec", k), x)


# decoding ------------------------------------------------------------------


def decode(w: WordModel):
    """Rebuild the history (or abstract execution) encoded by ``w``.

    Timestamps are positions. Operation ids come from the event index when
    present and are ``o1, o2, ...`` in start order otherwise. Trailing
    all-zero letters after the last event are ignored.
    """
    layout = w.layout
    m = layout.m
    meta = layout.meta
    letters = list(w.letters)
    if not letters:
        return _wrap(History(meta, ()), layout, set(), set())
    if any(letters[0]):
        raise EncodingError("first letter is not null")
    off = layout.offset
    prev = [0] * m
    running: list = [None] * m
    starts: dict = {}
    returns: dict = {}
    order: list = []
    padding = False
    for t in range(1, len(letters)):
        letter = letters[t]
        act = list(letter[:m])
        diff = [j for j in range(m) if act[j] != prev[j]]
        if not diff:
            if any(act) or any(letter):
                raise EncodingError(f"position {t}: no event but non-null letter")
            padding = True
            continue
        if padding:
            raise EncodingError(f"position {t}: event after trailing padding")
        if len(diff) > 1:
            raise EncodingError(f"position {t}: {len(diff)} active lanes change at once")
        j = diff[0]
        given = w.event_index[t] if t < len(w.event_index) and w.event_index[t] else None
        if act[j]:
            op_id = given[0] if given else f"o{len(order) + 1}"
            running[j] = op_id
            starts[op_id] = (t, j)
            order.append(op_id)
        else:
            op_id = running[j]
            if op_id is None:
                raise EncodingError(f"position {t}: return without a start")
            running[j] = None
            returns[op_id] = t
        prev = act
    if any(r is not None for r in running):
        raise EncodingError("some operation never returns")
    if layout.mode == "timeline":
        ops = [Operation(i, meta.processes[starts[i][1]], starts[i][0], returns[i], READ, meta.objects[0])
               for i in order]
        return History(meta, tuple(ops))
    ops = []
    for op_id in order:
        t, j = starts[op_id]
        r = returns[op_id]
        s_letter, r_letter = letters[t], letters[r]
        typ = WRITE if s_letter[off["type"]] else READ
        if r_letter[off["type"]] != s_letter[off["type"]]:
            raise EncodingError(f"{op_id}: type differs between start and return")
        ow, vw = layout.obj_width, layout.val_width
        obj_bits = s_letter[off["obj"]:off["obj"] + ow]
        if obj_bits != r_letter[off["obj"]:off["obj"] + ow]:
            raise EncodingError(f"{op_id}: object differs between start and return")
        oc = from_binary(obj_bits)
        if oc >= len(meta.objects):
            raise EncodingError(f"{op_id}: invalid object code {oc}")
        sv = layout.code_value(from_binary(s_letter[off["val"]:off["val"] + vw]))
        rv = layout.code_value(from_binary(r_letter[off["val"]:off["val"] + vw]))
        if typ == WRITE:
            if isinstance(sv, Special) or not isinstance(rv, Special):
                raise EncodingError(f"{op_id}: malformed write value codes")
            ival, oval = sv, rv
        else:
            if sv != rv:
                raise EncodingError(f"{op_id}: read value differs between start and return")
            ival, oval = EMPTY, sv
        ops.append(Operation(op_id, meta.processes[j], t, r, typ, meta.objects[oc], ival, oval))
    h = History(meta, tuple(ops))
    if layout.mode == "history":
        return h
    ar, vis = _decode_exec(h, layout, letters, starts)
    return _wrap(h, layout, vis, ar)


def _wrap(h: History, layout: BitLayout, vis, ar):
    if layout.mode != "exec":
        return h
    return AbstractExecution(h, frozenset(vis), frozenset(ar))


def _decode_exec(h: History, layout: BitLayout, letters: list, starts: dict):
    m, k = layout.m, layout.k
    off = layout.offset
    pidx = {p: i for i, p in enumerate(h.meta.processes)}
    arc, vis = set(), set()
    running: list = [None] * m
    by_pos = {t: op_id for op_id, (t, _) in starts.items()}
    returns = {o.rtime: o.id for o in h.ops}
    for t in range(1, len(letters)):
        letter = letters[t]
        if t in returns:
            running[pidx[h.op(returns[t]).proc]] = None
            if any(letter[off["arc"]:]):
                raise EncodingError(f"position {t}: execution bits set at a return")
            continue
        if t not in by_pos:
            continue
        b = by_pos[t]
        i = pidx[h.op(b).proc]
        for s in range(m - 1):
            j = layout.slot_process(i, s)
            c = running[j]
            bits = (letter[off["arc"] + s], letter[off["visc"] + s], letter[off["visc"] + m - 1 + s])
            if c is None:
                if any(bits):
                    raise EncodingError(f"position {t}: concurrency bits without a concurrent operation")
                continue
            arc.add((b, c) if bits[0] else (c, b))
            if bits[1] and bits[2]:
                raise EncodingError(f"position {t}: visibility both ways between {b} and {c}")
            if bits[1]:
                vis.add((c, b))
            if bits[2]:
                vis.add((b, c))
        for p, proc in enumerate(h.meta.processes):
            chain = successors_on(h, b, proc)
            for n in range(k):
                bit = letter[off["visrb"] + p * k + n]
                if n >= len(chain):
                    if bit:
                        raise EncodingError(f"position {t}: visibility bit for a missing successor")
                    continue
                if bit:
                    vis.add((b, chain[n]))
                    if n == k - 1:
                        vis.update((b, c) for c in chain[k:])
        running[i] = b
    rb = h.rb_pairs()
    ar = _transitive_closure(h.ids, rb | arc)
    ids = h.ids
    for x in ids:
        if (x, x) in ar:
            raise EncodingError("reconstructed arbitration is cyclic")
    for n, x in enumerate(ids):
        for y in ids[n + 1:]:
            if (x, y) not in ar and (y, x) not in ar:
                raise EncodingError(f"reconstructed arbitration is not total on {x}, {y}")
    if _transitive_closure(ids, vis) & {(x, x) for x in ids}:
        raise EncodingError("reconstructed visibility is cyclic")
    return ar, vis


def _transitive_closure(ids, rel) -> set:
    succ = {i: set() for i in ids}
    for a, b in rel:
        succ[a].add(b)
    out = set()
    for a in ids:
        stack, seen = list(succ[a]), set()
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(succ[b])
        out.update((a, b) for b in seen)
    return out
