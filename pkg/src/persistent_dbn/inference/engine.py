"""Exact smoothing by two-pass message passing over changepoint variables.

Variables are the persistent hidden nodes. Each persistent node with only
persistent parents owns a family factor; each isolated non-persistent node
becomes a hub factor (see :mod:`.nonpersistent`). Evidence on a node's own
trajectory and its observed leaves fold into a unary local potential. On a
polytree prototype the resulting factor graph is a forest, so one upward
and one downward sweep give exact posteriors.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import UnsupportedStructure
from ..messages import LAMBDA, PI, MessageVector, OpCounter, logsumexp
from ..model.evidence import EvidenceSet, check_evidence, evidence_to_lambda
from ..model.transform import ChangepointModel
from ..posterior import PosteriorTable, ZeroEvidenceProbability, marginals_from_changepoint
from .kernels import DEFAULT_MAX_IN_DEGREE, family_lambda_log, family_pi_log, leaf_likelihood_log
from .nonpersistent import HubFactor, hub_slice_marginals, nonpersistent_node_sumout


@dataclass(frozen=True)
class _Family:
    node: str
    scope: tuple[str, ...]  # (node, *parents)

    @property
    def key(self):
        return ("fam", self.node)


@dataclass(frozen=True, eq=False)
class _Hub:
    hub: HubFactor

    @property
    def scope(self):
        return self.hub.scope

    @property
    def key(self):
        return ("hub", self.hub.node)


@dataclass
class MessageSchedule:
    """Rooted orientation of one connected component of the factor graph."""

    root: str
    upward: list[tuple[object, object]]  # (sender, receiver), leaves first
    downward: list[tuple[object, object]]


@dataclass
class PassWorkspace:
    """Per-query storage: local potentials and every message, keyed by (sender, receiver)."""

    local: dict[str, np.ndarray]
    messages: dict[tuple[object, object], MessageVector] = field(default_factory=dict)


def _var(name):
    return ("var", name)


class FactorGraph:
    def __init__(self, model: ChangepointModel, ev: EvidenceSet):
        net = model.network
        self.model = model
        self.persistent = net.persistent_ids
        self.factors = {}
        absorbed = set()
        for node in net.nonpersistent_ids:
            hub = HubFactor.from_model(model, node, ev)
            absorbed.update(hub.children)
            f = _Hub(hub)
            self.factors[f.key] = f
        for node in self.persistent:
            spec = net.node(node)
            if node in absorbed:
                continue
            f = _Family(node, (node,) + tuple(spec.parents))
            self.factors[f.key] = f
        self.neighbors = {_var(v): [] for v in self.persistent}
        for key, f in self.factors.items():
            for v in f.scope:
                self.neighbors[_var(v)].append(key)
            self.neighbors[key] = [_var(v) for v in f.scope]

    def components(self):
        seen, comps = set(), []
        for start in list(self.neighbors):
            if start in seen:
                continue
            comp, queue = [], deque([start])
            seen.add(start)
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in self.neighbors[x]:
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
            comps.append(comp)
        return comps

    def _distances(self, start):
        dist = {start: 0}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in self.neighbors[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    def default_root(self, comp) -> str:
        """Variable of minimum eccentricity; ties go to declaration order."""
        names = [x[1] for x in comp if x[0] == "var"]
        order = {v: i for i, v in enumerate(self.persistent)}
        best = min(names, key=lambda v: (max(self._distances(_var(v)).values()), order[v]))
        return best

    def schedule(self, comp, root: str) -> MessageSchedule:
        start = _var(root)
        parent = {start: None}
        order = [start]
        stack = [start]
        while stack:
            x = stack.pop()
            for y in self.neighbors[x]:
                if y in parent:
                    if y != parent[x]:
                        raise UnsupportedStructure("factor graph has a loop")
                    continue
                parent[y] = x
                order.append(y)
                stack.append(y)
        edges = [(x, parent[x]) for x in order if parent[x] is not None]
        upward = list(reversed(edges))
        downward = [(p, x) for x, p in edges]
        return MessageSchedule(root=root, upward=upward, downward=downward)


def _local_potentials(model: ChangepointModel, ev: EvidenceSet, counter) -> dict[str, np.ndarray]:
    net = model.network
    m = model.horizon
    local = {}
    for node in net.persistent_ids:
        total = evidence_to_lambda(node, ev, m).log_values
        for obs in net.observations_of(node):
            index = {a: i for i, a in enumerate(model.alphabets[obs.id])}
            seen = ev.for_node(obs.id)
            observed = [index[str(seen[t])] if t in seen else None for t in range(1, m + 1)]
            total = total + leaf_likelihood_log(observed, model.emissions[obs.id], counter)
        local[node] = total
    return local


class _Runner:
    def __init__(self, graph: FactorGraph, ws: PassWorkspace, counter, max_in_degree):
        self.g = graph
        self.ws = ws
        self.counter = counter
        self.cap = max_in_degree

    def _log_msg(self, src, dst):
        return self.ws.messages[(src, dst)].log_values

    def var_to_factor(self, v, f):
        total = self.ws.local[v[1]].copy()
        for g in self.g.neighbors[v]:
            if g != f:
                total = total + self._log_msg(g, v)
        self.counter.add(total.size * len(self.g.neighbors[v]))
        factor = self.g.factors[f]
        kind = LAMBDA if isinstance(factor, _Family) and factor.node == v[1] else PI
        return MessageVector.from_log(total, kind)

    def factor_to_var(self, f, v):
        factor = self.g.factors[f]
        target = v[1]
        incoming = {u: self._log_msg(_var(u), f) for u in factor.scope if u != target}
        model = self.g.model
        if isinstance(factor, _Hub):
            return nonpersistent_node_sumout(factor.hub, target, incoming, self.counter, self.cap)
        fire = model.fire[factor.node]
        parents = factor.scope[1:]
        if target == factor.node:
            logv = family_pi_log(fire, [incoming[p] for p in parents], self.counter, self.cap, factor.node)
            return MessageVector.from_log(logv, PI)
        r = parents.index(target)
        others = [incoming[p] for p in parents if p != target]
        logv = family_lambda_log(fire, r, incoming[factor.node], others, self.counter, self.cap, factor.node)
        return MessageVector.from_log(logv, LAMBDA)

    def send(self, src, dst):
        if src[0] == "var":
            msg = self.var_to_factor(src, dst)
        else:
            msg = self.factor_to_var(src, dst)
        self.ws.messages[(src, dst)] = msg

    def belief(self, v):
        total = self.ws.local[v[1]].copy()
        for g in self.g.neighbors[v]:
            total = total + self._log_msg(g, v)
        return total


def smooth(model: ChangepointModel, ev: EvidenceSet | None = None, *, root: str | None = None,
           counter: OpCounter | None = None, max_in_degree: int = DEFAULT_MAX_IN_DEGREE,
           return_workspace: bool = False):
    """Exact posteriors of every hidden node given evidence over all ``M`` slices.

    Args:
        model: transformed model from :func:`changepoint_transform`.
        ev: observations; checked against the model before use.
        root: persistent node to root its component's schedule at (default:
            minimum eccentricity). Posteriors do not depend on this choice.
        counter: accumulates elementary operations.
        max_in_degree: enumeration cap for multi-parent families and hubs.

    Returns:
        A :class:`PosteriorTable`, or :class:`ZeroEvidenceProbability` when the
        evidence is impossible under the model.
    """
    ev = ev if ev is not None else EvidenceSet()
    counter = counter if counter is not None else OpCounter()
    check_evidence(ev, model.network, model.horizon)
    graph = FactorGraph(model, ev)
    ws = PassWorkspace(local=_local_potentials(model, ev, counter))
    runner = _Runner(graph, ws, counter, max_in_degree)

    changepoint, marginals, normalizers = {}, {}, {}
    log_lik = 0.0
    schedules = []
    for comp in graph.components():
        comp_vars = [x[1] for x in comp if x[0] == "var"]
        if not comp_vars:
            continue
        r = root if root in comp_vars else graph.default_root(comp)
        sched = graph.schedule(comp, r)
        schedules.append(sched)
        for src, dst in sched.upward:
            runner.send(src, dst)
        for src, dst in sched.downward:
            runner.send(src, dst)
        comp_norm = None
        for v in comp_vars:
            b = runner.belief(_var(v))
            z = float(logsumexp(b))
            normalizers[v] = z
            if v == r:
                comp_norm = z
            if np.isfinite(z):
                changepoint[v] = np.exp(b - z)
            else:
                changepoint[v] = np.zeros_like(b)
            marginals[v] = marginals_from_changepoint(changepoint[v])
        log_lik += comp_norm

    m = model.horizon
    for key, f in graph.factors.items():
        if not isinstance(f, _Hub):
            continue
        incoming = {u: runner._log_msg(_var(u), key) for u in f.scope}
        marg, log_z = hub_slice_marginals(f.hub, incoming, counter)
        marginals[f.hub.node] = marg
        if not f.scope:
            log_lik += log_z
            normalizers[f.hub.node] = log_z

    if not np.isfinite(log_lik):
        return ZeroEvidenceProbability(op_count=counter.count)
    table = PosteriorTable(
        horizon=m,
        changepoint=changepoint,
        marginals=marginals,
        log_likelihood=log_lik,
        normalizers=normalizers,
        op_count=counter.count,
    )
    if return_workspace:
        return table, ws, schedules
    return table
