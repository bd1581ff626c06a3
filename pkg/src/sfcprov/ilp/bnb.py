"""Depth-first branch-and-bound for the binary embedding program.

Branching takes the lowest-index free column, 0-branch first. Each node runs
bound propagation over the linear rows, then prunes with an LP-free lower
bound: fixed cost, plus the cheapest remaining placement of every unplaced
instance, plus for every virtual link the cheapest route its still-allowed
arcs admit.
"""
from __future__ import annotations

import heapq
import math
import sys
import time
from collections import deque
from dataclasses import dataclass

from ..embedding import Embedding, e2e_delay, within_budget
from ..errors import BudgetExceeded, Infeasible
from .model import IlpModel

_EPS = 1e-9


@dataclass(frozen=True)
class SolveLimits:
    max_nodes: int = 2_000_000
    time_budget: float | None = None  # wall-clock seconds; None disables


class _Search:
    def __init__(self, model: IlpModel, limits: SolveLimits, delay_budget):
        self.m = model
        self.limits = limits
        self.delay_budget = delay_budget
        self.c = list(model.objective)
        n = model.n_vars
        self.n = n
        self.rows = [(tuple(r.coefs.items()), r.sense, r.rhs) for r in model.rows]
        self.var_rows: list[list[int]] = [[] for _ in range(n)]
        for k, (items, _, _) in enumerate(self.rows):
            for v, _a in items:
                self.var_rows[v].append(k)
        self.val = [-1] * n
        self.trail: list[int] = []
        self.nodes = 0
        self.best = math.inf
        self.best_val: list[int] | None = None
        self.t0 = time.monotonic()

        inst: dict[int, list[tuple[int, int]]] = {}
        for (i, p), v in model.x_index.items():
            inst.setdefault(i, []).append((p, v))
        self.inst = {i: sorted(lst) for i, lst in sorted(inst.items())}
        self.pops = sorted({p for (_, p) in model.x_index})
        arcs: dict[int, list[tuple[int, int, int]]] = {}
        for (l, a, b), v in model.y_index.items():
            arcs.setdefault(l, []).append((a, b, v))
        self.arcs = {l: sorted(lst) for l, lst in arcs.items()}
        self.apsp = {l: self._floyd(lst) for l, lst in self.arcs.items()}

    def _floyd(self, arcs):
        d = {(a, b): (0.0 if a == b else math.inf) for a in self.pops for b in self.pops}
        for a, b, v in arcs:
            d[(a, b)] = min(d[(a, b)], self.c[v])
        for k in self.pops:
            for a in self.pops:
                dak = d[(a, k)]
                if dak == math.inf:
                    continue
                for b in self.pops:
                    alt = dak + d[(k, b)]
                    if alt < d[(a, b)]:
                        d[(a, b)] = alt
        return d

    # -- propagation ------------------------------------------------------
    def _fix(self, v: int, x: int, queue, queued) -> bool:
        cur = self.val[v]
        if cur != -1:
            return cur == x
        self.val[v] = x
        self.trail.append(v)
        for r in self.var_rows[v]:
            if r not in queued:
                queued.add(r)
                queue.append(r)
        return True

    def propagate(self, seed_rows) -> bool:
        queue = deque(seed_rows)
        queued = set(seed_rows)
        val = self.val
        while queue:
            r = queue.popleft()
            queued.discard(r)
            items, sense, rhs = self.rows[r]
            lo = hi = 0.0
            free = []
            for v, a in items:
                s = val[v]
                if s == -1:
                    free.append((v, a))
                    if a > 0:
                        hi += a
                    else:
                        lo += a
                elif s == 1:
                    lo += a
                    hi += a
            le = sense != ">="
            ge = sense != "<="
            if le and lo > rhs + _EPS:
                return False
            if ge and hi < rhs - _EPS:
                return False
            for v, a in free:
                if le:
                    if a > 0 and lo + a > rhs + _EPS and not self._fix(v, 0, queue, queued):
                        return False
                    if a < 0 and lo - a > rhs + _EPS and not self._fix(v, 1, queue, queued):
                        return False
                if ge:
                    if a > 0 and hi - a < rhs - _EPS and not self._fix(v, 1, queue, queued):
                        return False
                    if a < 0 and hi + a < rhs - _EPS and not self._fix(v, 0, queue, queued):
                        return False
        return True

    def undo(self, mark: int) -> None:
        val, trail = self.val, self.trail
        while len(trail) > mark:
            val[trail.pop()] = -1

    # -- bounding ---------------------------------------------------------
    def hosts(self, i):
        placed = None
        cands = []
        for p, v in self.inst[i]:
            s = self.val[v]
            if s == 1:
                placed = p
            elif s == -1:
                cands.append((p, v))
        return placed, cands

    def bound(self) -> float:
        c, val = self.c, self.val
        total = 0.0
        for v in range(self.n):
            if val[v] == 1:
                total += c[v]
        host_sets = {}
        for i in self.inst:
            placed, cands = self.hosts(i)
            if placed is not None:
                host_sets[i] = (placed,)
            elif not cands:
                return math.inf
            else:
                total += min(c[v] for _, v in cands)
                host_sets[i] = tuple(p for p, _ in cands)
        for l, (i, j) in self.m.link_ends.items():
            arcs = self.arcs.get(l, ())
            fixed = 0.0
            for a, b, v in arcs:
                if val[v] == 1:
                    fixed += c[v]
            hi_, hj = host_sets[i], host_sets[j]
            if len(hi_) == 1 and len(hj) == 1:
                sp = self._route_lb(arcs, hi_[0], hj[0])
            else:
                d = self.apsp[l] if arcs else None
                sp = min((0.0 if a == b else (d[(a, b)] if d else math.inf))
                         for a in hi_ for b in hj)
            if sp == math.inf:
                return math.inf
            if sp > fixed:
                total += sp - fixed
        return total

    def _route_lb(self, arcs, src, dst) -> float:
        if src == dst:
            return 0.0
        c, val = self.c, self.val
        adj: dict[int, list[tuple[int, float]]] = {}
        for a, b, v in arcs:
            if val[v] != 0:
                adj.setdefault(a, []).append((b, c[v]))
        dist = {src: 0.0}
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if u == dst:
                return d
            if d > dist.get(u, math.inf):
                continue
            for w, cw in adj.get(u, ()):
                nd = d + cw
                if nd < dist.get(w, math.inf):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        return math.inf

    # -- search -----------------------------------------------------------
    def _check_limits(self):
        if self.nodes > self.limits.max_nodes:
            raise BudgetExceeded(f"node limit {self.limits.max_nodes} reached")
        if (self.limits.time_budget is not None and self.nodes % 256 == 0
                and time.monotonic() - self.t0 > self.limits.time_budget):
            raise BudgetExceeded(f"time budget {self.limits.time_budget}s reached")

    def leaf(self):
        cost = 0.0
        for v in range(self.n):
            if self.val[v] == 1:
                cost += self.c[v]
        if cost >= self.best:
            return
        if self.delay_budget is not None and self.m.vt is not None and self.m.net is not None:
            emb = decode(self.m, self.val)
            delays = [self.m.net.path_delay(emb.routing[l.id]) for l in self.m.vt.links]
            if not within_budget(e2e_delay(self.m.vt, delays), self.delay_budget):
                return
        self.best = cost
        self.best_val = list(self.val)

    def dfs(self, start: int):
        self.nodes += 1
        self._check_limits()
        if self.bound() >= self.best:
            return
        v = start
        while v < self.n and self.val[v] != -1:
            v += 1
        if v == self.n:
            self.leaf()
            return
        for x in (0, 1):
            mark = len(self.trail)
            self.val[v] = x
            self.trail.append(v)
            if self.propagate(self.var_rows[v]):
                self.dfs(v + 1)
            self.undo(mark)


def decode(model: IlpModel, val) -> Embedding:
    placement = {i: p for (i, p), v in sorted(model.x_index.items()) if val[v] == 1}
    routing = {}
    per_link: dict[int, dict[int, list[int]]] = {}
    for (l, a, b), v in sorted(model.y_index.items()):
        if val[v] == 1:
            per_link.setdefault(l, {}).setdefault(a, []).append(b)
    for l, (i, j) in sorted(model.link_ends.items()):
        src, dst = placement[i], placement[j]
        adj = per_link.get(l, {})
        prev = {src: None}
        q = deque([src])
        while q:
            u = q.popleft()
            if u == dst:
                break
            for w in sorted(adj.get(u, ())):
                if w not in prev:
                    prev[w] = u
                    q.append(w)
        path = [dst]
        while prev.get(path[-1]) is not None:
            path.append(prev[path[-1]])
        routing[l] = tuple(reversed(path))
    return Embedding(placement, routing)


def solve_exact(model: IlpModel, limits: SolveLimits = SolveLimits(),
                delay_budget: float | None = None) -> Embedding:
    """Globally optimal embedding, or raise ``Infeasible`` / ``BudgetExceeded``.

    With ``delay_budget`` set, complete assignments whose end-to-end delay
    exceeds it are skipped and the search continues past them.
    """
    search = _Search(model, limits, delay_budget)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * model.n_vars + 1000))
    try:
        if search.propagate(range(len(search.rows))):
            search.dfs(0)
    finally:
        sys.setrecursionlimit(old_limit)
    if search.best_val is None:
        raise Infeasible(f"no feasible assignment ({search.nodes} nodes explored)")
    emb = decode(model, search.best_val)
    emb.objective = search.best
    emb.nodes = search.nodes
    return emb
