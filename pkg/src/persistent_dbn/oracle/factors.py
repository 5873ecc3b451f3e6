"""Dense discrete factors and variable elimination with a min-fill order."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import prod

import numpy as np

from ..errors import MemoryBudgetExceeded
from ..messages import OpCounter, count

DEFAULT_VE_BUDGET = 1 << 22  # largest intermediate table, in entries


@dataclass(frozen=True, eq=False)
class FactorTable:
    """Non-negative table over ``variables``; axis ``i`` indexes ``variables[i]``."""

    variables: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != len(self.variables):
            raise ValueError(f"table has {t.ndim} axes for {len(self.variables)} variables")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "table", t)

    @property
    def size(self) -> int:
        return int(self.table.size)

    def domains(self) -> dict:
        return dict(zip(self.variables, self.table.shape))

    def _aligned(self, order):
        """View over ``order`` (a superset of our variables) with singleton axes."""
        if self.variables == tuple(order):
            return self.table
        pos = {v: i for i, v in enumerate(self.variables)}
        perm = [pos[v] for v in order if v in pos]
        t = np.transpose(self.table, perm)
        shape = [self.table.shape[pos[v]] if v in pos else 1 for v in order]
        return t.reshape(shape)

    def multiply(self, other: "FactorTable", counter: OpCounter | None = None) -> "FactorTable":
        return product([self, other], counter)

    def marginalize(self, drop, counter: OpCounter | None = None) -> "FactorTable":
        """Sum out the variables in ``drop``."""
        drop = set(drop)
        axes = tuple(i for i, v in enumerate(self.variables) if v in drop)
        count(counter, self.size)
        keep = tuple(v for v in self.variables if v not in drop)
        return FactorTable(keep, self.table.sum(axis=axes))

    def reduce(self, assignment: dict) -> "FactorTable":
        """Fix some variables to given values and drop them."""
        index = tuple(assignment.get(v, slice(None)) for v in self.variables)
        keep = tuple(v for v in self.variables if v not in assignment)
        return FactorTable(keep, self.table[index])

    def normalize(self) -> "FactorTable":
        return FactorTable(self.variables, self.table / self.table.sum())


def product(factors, counter: OpCounter | None = None) -> FactorTable:
    factors = list(factors)
    if not factors:
        return FactorTable((), np.array(1.0))
    if len(factors) == 1:
        return factors[0]
    domains = {}
    for f in factors:
        for v, n in zip(f.variables, f.table.shape):
            domains.setdefault(v, n)
    order = tuple(domains)
    out = factors[0]._aligned(order)
    for f in factors[1:]:
        out = out * f._aligned(order)
    shape = tuple(domains[v] for v in order)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    count(counter, out.size * (len(factors) - 1))
    return FactorTable(order, out)


def _interaction_graph(scopes):
    adj = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set()).update(u for u in scope if u != v)
    return adj


def min_fill_order(scopes, domains: dict, keep=(), budget: int | None = None):
    """Greedy min-fill elimination order over every variable not in ``keep``.

    Ties break on clique weight, then on first appearance. Returns the order
    and the largest clique table size it induces.

    Raises:
        MemoryBudgetExceeded: as soon as a clique larger than ``budget`` appears.
    """
    adj = _interaction_graph(scopes)
    keep = set(keep)
    rank = {v: i for i, v in enumerate(adj)}
    for v in keep:
        adj.setdefault(v, set())

    def score(v):
        nb = [u for u in adj[v]]
        fill = 0
        for i, a in enumerate(nb):
            row = adj[a]
            for b in nb[i + 1:]:
                if b not in row:
                    fill += 1
        weight = domains[v] * prod(domains[u] for u in nb)
        return (fill, weight, rank[v])

    heap = [(score(v), v) for v in adj if v not in keep]
    heapq.heapify(heap)
    current = {v: s for s, v in heap}
    order, peak = [], 1
    eliminated = set()
    while heap:
        s, v = heapq.heappop(heap)
        if v in eliminated or current.get(v) != s:
            continue
        clique = domains[v] * prod(domains[u] for u in adj[v])
        peak = max(peak, clique)
        if budget is not None and clique > budget:
            raise MemoryBudgetExceeded(clique, budget, "variable elimination")
        nb = list(adj[v])
        for a in nb:
            adj[a].discard(v)
            adj[a].update(u for u in nb if u != a)
        del adj[v]
        eliminated.add(v)
        order.append(v)
        dirty = set(nb)
        for a in nb:
            dirty.update(adj[a])
        for u in dirty:
            if u in keep or u in eliminated:
                continue
            sc = score(u)
            current[u] = sc
            heapq.heappush(heap, (sc, u))
    return order, peak


def induced_peak(scopes, domains: dict, order) -> int:
    """Largest clique table produced by eliminating ``order`` (symbolic)."""
    adj = _interaction_graph(scopes)
    peak = 1
    for v in order:
        nb = list(adj.get(v, ()))
        peak = max(peak, domains[v] * prod(domains[u] for u in nb))
        for a in nb:
            adj[a].discard(v)
            adj[a].update(u for u in nb if u != a)
        adj.pop(v, None)
    return peak


def variable_elimination(factors, query=(), order=None, budget: int | None = DEFAULT_VE_BUDGET,
                         counter: OpCounter | None = None):
    """Sum out every non-query variable.

    Returns ``(joint over query, log normalizer)``; the joint is normalized
    unless the evidence has probability zero.

    Raises:
        MemoryBudgetExceeded: an intermediate table would exceed ``budget`` entries.
    """
    factors = list(factors)
    domains = {}
    for f in factors:
        domains.update(f.domains())
    query = tuple(query)
    scopes = [f.variables for f in factors]
    if order is None:
        order, _ = min_fill_order(scopes, domains, keep=query, budget=budget)
    else:
        order = [v for v in order if v not in query and v in domains]
        if budget is not None:
            peak = induced_peak(scopes, domains, order)
            if peak > budget:
                raise MemoryBudgetExceeded(peak, budget, "variable elimination")
    pool = factors
    log_scale = 0.0
    for v in order:
        bucket = [f for f in pool if v in f.variables]
        if not bucket:
            continue
        pool = [f for f in pool if v not in f.variables]
        merged = product(bucket, counter).marginalize([v], counter)
        top = merged.table.max() if merged.size else 0.0
        if top > 0:
            merged = FactorTable(merged.variables, merged.table / top)
            log_scale += float(np.log(top))
        pool.append(merged)
    joint = product(pool, counter)
    joint = FactorTable(joint.variables, joint.table)
    if query:
        joint = joint.marginalize([v for v in joint.variables if v not in query], counter)
        perm = [joint.variables.index(q) for q in query]
        joint = FactorTable(query, np.transpose(joint.table, perm))
    total = float(joint.table.sum())
    if total <= 0:
        return joint, -np.inf
    return joint.normalize(), log_scale + float(np.log(total))
