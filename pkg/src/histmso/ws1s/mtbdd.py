"""Shared multi-terminal BDDs used as the transition function of automata.

A node is an int. Internal nodes test one bit (track index, smaller index
closer to the root) and leaves carry an arbitrary hashable value, usually a
target state. Nodes are hash-consed, so equal functions share one node id.
"""

from __future__ import annotations

import sys
from typing import Callable, Iterator

LEAF = sys.maxsize

sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))


class Manager:
    def __init__(self):
        self.var: list = []
        self.lo: list = []
        self.hi: list = []
        self._unique: dict = {}
        self._leaf_ids: dict = {}
        self.value: dict = {}

    def __len__(self) -> int:
        return len(self.var)

    def leaf(self, value) -> int:
        n = self._leaf_ids.get(value)
        if n is None:
            n = len(self.var)
            self.var.append(LEAF)
            self.lo.append(-1)
            self.hi.append(-1)
            self._leaf_ids[value] = n
            self.value[n] = value
        return n

    def node(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        n = self._unique.get(key)
        if n is None:
            n = len(self.var)
            self.var.append(v)
            self.lo.append(lo)
            self.hi.append(hi)
            self._unique[key] = n
        return n

    def is_leaf(self, u: int) -> bool:
        return self.var[u] == LEAF

    # construction ---------------------------------------------------------

    def from_function(self, tracks: list, fn: Callable[[tuple], object]) -> int:
        """Decision diagram of ``fn`` over the bits of ``tracks`` (a short list of indices)."""
        order = sorted(set(tracks))

        def build(i: int, fixed: dict) -> int:
            if i == len(order):
                return self.leaf(fn(tuple(fixed[t] for t in tracks)))
            t = order[i]
            lo = build(i + 1, {**fixed, t: 0})
            hi = build(i + 1, {**fixed, t: 1})
            return self.node(t, lo, hi)

        return build(0, {})

    # operations -----------------------------------------------------------

    def apply(self, u: int, w: int, fn: Callable, memo: dict) -> int:
        """Pointwise combination; ``fn`` receives the two leaf values and returns a node."""
        key = (u, w)
        r = memo.get(key)
        if r is not None:
            return r
        var = self.var
        vu, vw = var[u], var[w]
        if vu == LEAF and vw == LEAF:
            r = fn(self.value[u], self.value[w])
        else:
            if vu <= vw:
                top = vu
                ulo, uhi = self.lo[u], self.hi[u]
            else:
                top = vw
                ulo = uhi = u
            if vw <= vu:
                wlo, whi = self.lo[w], self.hi[w]
            else:
                wlo = whi = w
            r = self.node(top, self.apply(ulo, wlo, fn, memo), self.apply(uhi, whi, fn, memo))
        memo[key] = r
        return r

    def map_leaves(self, u: int, fn: Callable, memo: dict) -> int:
        """Replace every leaf value v by the node ``fn(v)``."""
        r = memo.get(u)
        if r is not None:
            return r
        if self.var[u] == LEAF:
            r = fn(self.value[u])
        else:
            r = self.node(self.var[u], self.map_leaves(self.lo[u], fn, memo), self.map_leaves(self.hi[u], fn, memo))
        memo[u] = r
        return r

    def exists(self, u: int, v: int, join: Callable[[int, int], int], memo: dict) -> int:
        """Eliminate track ``v`` by joining both cofactors with ``join``."""
        r = memo.get(u)
        if r is not None:
            return r
        vu = self.var[u]
        if vu > v:
            r = u
        elif vu == v:
            r = join(self.lo[u], self.hi[u])
        else:
            r = self.node(vu, self.exists(self.lo[u], v, join, memo), self.exists(self.hi[u], v, join, memo))
        memo[u] = r
        return r

    def evaluate(self, u: int, bits) -> object:
        """Leaf reached when track i carries ``bits[i]`` (missing tracks read as 0)."""
        var, lo, hi = self.var, self.lo, self.hi
        while var[u] != LEAF:
            v = var[u]
            u = hi[u] if bits.get(v, 0) else lo[u]
        return self.value[u]

    def paths(self, u: int) -> Iterator[tuple]:
        """(cube, leaf value) pairs in low-first order; cube maps track -> bit."""
        if self.var[u] == LEAF:
            yield {}, self.value[u]
            return
        v = self.var[u]
        for bit, child in ((0, self.lo[u]), (1, self.hi[u])):
            for cube, val in self.paths(child):
                yield {v: bit, **cube}, val

    def leaves(self, u: int) -> list:
        """Distinct leaf values in low-first order."""
        out: list = []
        seen = set()
        stack = [u]
        visited = set()
        while stack:
            n = stack.pop()
            if n in visited:
                continue
            visited.add(n)
            if self.var[n] == LEAF:
                val = self.value[n]
                if val not in seen:
                    seen.add(val)
                    out.append(val)
            else:
                stack.append(self.hi[n])
                stack.append(self.lo[n])
        return out

    def first_cubes(self, u: int) -> list:
        """(leaf value, smallest cube reaching it) for each distinct leaf, in low-first order."""
        out: list = []
        seen_leaf = set()
        visited = set()

        def go(n: int, cube: dict) -> None:
            if n in visited:
                return
            visited.add(n)
            if self.var[n] == LEAF:
                val = self.value[n]
                if val not in seen_leaf:
                    seen_leaf.add(val)
                    out.append((val, dict(cube)))
                return
            v = self.var[n]
            cube[v] = 0
            go(self.lo[n], cube)
            cube[v] = 1
            go(self.hi[n], cube)
            del cube[v]

        go(u, {})
        return out

    def support(self, u: int) -> set:
        out = set()
        stack, seen = [u], set()
        while stack:
            n = stack.pop()
            if n in seen or self.var[n] == LEAF:
                continue
            seen.add(n)
            out.add(self.var[n])
            stack.extend((self.lo[n], self.hi[n]))
        return out

    def size(self, u: int) -> int:
        stack, seen = [u], set()
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if self.var[n] != LEAF:
                stack.extend((self.lo[n], self.hi[n]))
        return len(seen)
