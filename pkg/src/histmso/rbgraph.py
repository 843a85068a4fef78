"""Sparse generator graph of returns-before and its cutwidth along the start order."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

from .history import History, check_history, rb, succs

EXACT_CAP = 16


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    target_proc: str


@dataclass(frozen=True)
class GenGraph:
    history: History
    edges: tuple  # Edge, in insertion order

    @property
    def ord(self) -> tuple:
        return self.history.ids

    @property
    def m(self) -> int:
        return len(self.history.meta.processes)

    def pairs(self) -> set:
        return {(e.source, e.target) for e in self.edges}

    def out_degree(self, a: str) -> int:
        return sum(1 for e in self.edges if e.source == a)

    def in_degree(self, a: str) -> int:
        return sum(1 for e in self.edges if e.target == a)

    def adjacency(self) -> dict:
        adj: dict = {i: [] for i in self.ord}
        for e in self.edges:
            adj[e.source].append(e.target)
        return adj


def _reaches(adj: dict, a: str, b: str) -> bool:
    stack, seen = [a], {a}
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v == b:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def build_generator(h: History, literal: bool = False) -> GenGraph:
    """Walk the start order backwards; link each operation to each of its direct
    successors (in start order) unless a path to it already exists.

    With ``literal=True`` every iteration of the inner loop tests and links the
    last direct successor only, which reproduces the loop body as printed; that
    variant loses returns-before pairs and exists for comparison.
    """
    check_history(h)
    order = h.ids
    pos = {i: n for n, i in enumerate(order)}
    adj: dict = {i: [] for i in order}
    edges: list = []
    for a in reversed(order[:-1]):
        targets = sorted(succs(h, a), key=pos.__getitem__)
        for b in targets:
            if literal:
                b = targets[-1]
            if not _reaches(adj, a, b):
                adj[a].append(b)
                edges.append(Edge(a, b, h.op(b).proc))
    return GenGraph(h, tuple(edges))


def transitive_closure(g: GenGraph) -> set:
    adj = g.adjacency()
    out = set()
    for a in g.ord:
        stack, seen = list(adj[a]), set()
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v])
        out.update((a, v) for v in seen)
    return out


def rb_relation(h: History) -> set:
    return {(a, b) for a in h.ids for b in h.ids if rb(h, a, b)}


# cuts -------------------------------------------------------------------------------


@dataclass(frozen=True)
class CutReport:
    index: int
    left: tuple
    right: tuple
    gamma: frozenset  # per process, the last operation of the left side
    lam: frozenset  # per process, the first operation of the right side
    crossing: tuple  # crossing edges as (source, target)

    @property
    def width(self) -> int:
        return len(self.crossing)


def _boundary(h: History, ids, last: bool) -> frozenset:
    pick: dict = {}
    for i in ids:
        p = h.op(i).proc
        cur = pick.get(p)
        if cur is None or (h.op(i).stime > h.op(cur).stime) == last:
            pick[p] = i
    return frozenset(pick.values())


def cut(g: GenGraph, index: int) -> CutReport:
    """The cut after the first ``index`` operations of the start order."""
    n = len(g.ord)
    if not 1 <= index <= n:
        raise GraphError(f"cut index {index} outside 1..{n}")
    left, right = g.ord[:index], g.ord[index:]
    lset = set(left)
    crossing = tuple((e.source, e.target) for e in g.edges if (e.source in lset) != (e.target in lset))
    h = g.history
    return CutReport(index, left, right, _boundary(h, left, True), _boundary(h, right, False), crossing)


def cuts(g: GenGraph) -> list:
    return [cut(g, i) for i in range(1, len(g.ord) + 1)]


def cutwidth_along_ord(g: GenGraph) -> int:
    return max((c.width for c in cuts(g)), default=0)


def bound(m: int) -> int:
    return 2 * m * m


def cut_lemma_violations(report: CutReport) -> list:
    """Crossing edges that go right-to-left, or leave a non-boundary left operation
    for a non-boundary right operation."""
    lset = set(report.left)
    out = []
    for a, b in report.crossing:
        if a not in lset:
            out.append(("right to left", a, b))
        elif a not in report.gamma and b not in report.lam:
            out.append(("inner left to inner right", a, b))
    return out


def exact_cutwidth(g: GenGraph, cap: int = EXACT_CAP) -> int:
    """Minimum over all vertex orders of the largest cut, by dynamic programming
    over prefix sets (direction-blind edge count)."""
    n = len(g.ord)
    if n > cap:
        raise GraphError(f"exact cutwidth is limited to {cap} operations, got {n}")
    if n == 0:
        return 0
    idx = {i: k for k, i in enumerate(g.ord)}
    nbr = [0] * n
    for e in g.edges:
        s, t = idx[e.source], idx[e.target]
        nbr[s] |= 1 << t
        nbr[t] |= 1 << s
    full = (1 << n) - 1
    width = [0] * (1 << n)
    for s in range(1, 1 << n):
        low = (s & -s).bit_length() - 1
        prev = s & ~(1 << low)
        # adding vertex `low` to `prev`: its edges into prev stop crossing, the others start
        inside = bin(nbr[low] & prev).count("1")
        outside = bin(nbr[low] & ~s & full).count("1")
        width[s] = width[prev] - inside + outside
    best = [0] * (1 << n)
    for s in range(1, 1 << n):
        m = None
        rest = s
        while rest:
            bit = rest & -rest
            rest ^= bit
            v = best[s ^ bit]
            if m is None or v < m:
                m = v
        best[s] = max(m, width[s])
    return best[full]


# reports and export ----------------------------------------------------------------


@dataclass
class GraphReport:
    edges: list
    ord_cutwidth: int
    bound: int
    within_bound: bool
    max_out_degree: int
    max_in_degree: int
    closure_is_rb: bool
    lemma_violations: list
    exact_cutwidth: Optional[int] = None

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["edges"] = [list(e) for e in self.edges]
        out["lemma_violations"] = [list(v) for v in self.lemma_violations]
        return out


def analyze(h: History, exact: bool = False, literal: bool = False) -> GraphReport:
    g = build_generator(h, literal)
    reports = cuts(g)
    width = max((c.width for c in reports), default=0)
    m = g.m
    return GraphReport(
        edges=[(e.source, e.target) for e in g.edges],
        ord_cutwidth=width,
        bound=bound(m),
        within_bound=width <= bound(m),
        max_out_degree=max((g.out_degree(a) for a in g.ord), default=0),
        max_in_degree=max((g.in_degree(a) for a in g.ord), default=0),
        closure_is_rb=transitive_closure(g) == rb_relation(h),
        lemma_violations=[(c.index,) + v for c in reports for v in cut_lemma_violations(c)],
        exact_cutwidth=exact_cutwidth(g) if exact else None,
    )


def cut_profile(g: GenGraph) -> list:
    return [(c.index, c.width, len(c.gamma), len(c.lam)) for c in cuts(g)]


def cut_profile_csv(g: GenGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cut", "crossing", "gamma", "lambda"])
    w.writerows(cut_profile(g))
    return buf.getvalue()


def to_dot(g: GenGraph, name: str = "rb") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for i in g.ord:
        o = g.history.op(i)
        lines.append(f'  "{i}" [label="{i}\\n{o.proc}"];')
    for e in g.edges:
        lines.append(f'  "{e.source}" -> "{e.target}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


__all__ = [
    "CutReport",
    "EXACT_CAP",
    "Edge",
    "GenGraph",
    "GraphError",
    "GraphReport",
    "analyze",
    "bound",
    "build_generator",
    "cut",
    "cut_lemma_violations",
    "cut_profile",
    "cut_profile_csv",
    "cuts",
    "cutwidth_along_ord",
    "exact_cutwidth",
    "rb_relation",
    "to_dot",
    "transitive_closure",
]
