"""Summing out an isolated non-persistent node's whole temporal chain.

A non-persistent hidden node ``C`` whose neighbours are all persistent is
replaced by one factor over the changepoints of its parents, its children
and its children's other parents. Messages out of that factor enumerate the
non-target changepoints and, for each configuration, run a two-state
forward-backward pass over ``C^1..C^M`` (O(M) per configuration). The
minimal pattern, a parentless stationary ``C`` with one persistent child,
uses the kappa recurrence with its index-shift property instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import InDegreeTooLarge, NonIsolatedNonPersistent
from ..messages import LAMBDA, PI, MessageVector, count, logsumexp
from .kernels import DEFAULT_MAX_IN_DEGREE, _log


def _bits(states, d):
    idx = 0
    for r, s in enumerate(states):
        idx = idx | (np.asarray(s, dtype=int) << (d - 1 - r))
    return idx


@dataclass(frozen=True, eq=False)
class HubFactor:
    """Everything needed to sum out one non-persistent node."""

    node: str
    parents: tuple[str, ...]
    children: tuple[str, ...]
    child_parents: dict[str, tuple[str, ...]]
    fire: np.ndarray  # (M, 2, 2**len(parents)): [slice, own previous state, parent bits]
    child_fire: dict[str, np.ndarray]  # (M, 2**len(child_parents[y]))
    evidence: np.ndarray  # (M, 2) indicator of allowed states
    stationary: bool = True

    @classmethod
    def from_model(cls, model, node: str, ev=None) -> "HubFactor":
        net = model.network
        spec = net.node(node)
        kids = [c for c in net.children()[node]]
        for nb in list(spec.parents) + kids:
            if not net.node(nb).persistent:
                raise NonIsolatedNonPersistent(node, nb)
        evidence = np.ones((model.horizon, 2))
        if ev is not None:
            for t, v in ev.for_node(node).items():
                evidence[t - 1, 1 - int(v)] = 0.0
        return cls(
            node=node,
            parents=tuple(spec.parents),
            children=tuple(kids),
            child_parents={c: tuple(net.node(c).parents) for c in kids},
            fire=model.fire[node],
            child_fire={c: model.fire[c] for c in kids},
            evidence=evidence,
            stationary=model.stationary[node] and all(model.stationary[c] for c in kids),
        )

    @property
    def horizon(self) -> int:
        return self.fire.shape[0]

    @property
    def scope(self) -> tuple[str, ...]:
        out = list(self.parents) + list(self.children)
        for c in self.children:
            out += [p for p in self.child_parents[c] if p != self.node]
        return tuple(dict.fromkeys(out))

    def is_minimal(self) -> bool:
        """Parentless, unobserved, stationary, one child with no other parent."""
        return (
            not self.parents
            and len(self.children) == 1
            and self.child_parents[self.children[0]] == (self.node,)
            and bool(np.all(self.evidence == 1.0))
            and self.stationary
        )

    # -- per-slice two-state kernels ------------------------------------------

    def _child_fire(self, child, t, states, batch):
        parents = self.child_parents[child]
        d = len(parents)
        out = np.empty((batch, 2))
        for c in (0, 1):
            idx = _bits([c if p == self.node else states[p] for p in parents], d)
            out[:, c] = self.child_fire[child][t - 1, np.broadcast_to(idx, (batch,))]
        return out

    def _kernel(self, t, states, changepoints, batch, skip=None):
        d = len(self.parents)
        pidx = np.broadcast_to(_bits([states[p] for p in self.parents], d), (batch,))
        k = np.empty((batch, 2, 2))
        for prev in (0, 1):
            p1 = self.fire[t - 1, prev, pidx]
            k[:, prev, 1] = p1
            k[:, prev, 0] = 1.0 - p1
        k *= self.evidence[t - 1][None, None, :]
        for child in self.children:
            if child == skip:
                continue
            f = self._child_fire(child, t, states, batch)
            z = changepoints[child][:, None]
            phi = np.where(t <= z, 1.0 - f, np.where(t == z + 1, f, 1.0))
            k *= phi[:, None, :]
        return k

    def _states(self, t, names, configs, fixed=None):
        states = {v: (configs[:, i] < t).astype(int) for i, v in enumerate(names)}
        if fixed:
            states.update(fixed)
        return states


def _config_grid(n, size):
    if n == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product(range(size), repeat=n)), dtype=int)


def _forward(kernels, batch, emit=None):
    """Scaled forward pass; returns normalized vectors and cumulative log-scales."""
    m = len(kernels)
    f = np.zeros((batch, 2))
    f[:, 0] = 1.0
    fs = np.empty((batch, m + 1, 2))
    ls = np.zeros((batch, m + 1))
    fs[:, 0] = f
    acc = np.zeros(batch)
    for t, k in enumerate(kernels, start=1):
        f = np.einsum("bi,bij->bj", f, k)
        if emit is not None:
            f = f * emit[t - 1]
        s = f.max(axis=1)
        safe = np.where(s > 0, s, 1.0)
        f = f / safe[:, None]
        acc = acc + _log(s)
        fs[:, t] = f
        ls[:, t] = acc
    return fs, ls


def _backward(kernels, batch):
    m = len(kernels)
    g = np.ones((batch, 2))
    gs = np.empty((batch, m + 1, 2))
    ls = np.zeros((batch, m + 1))
    gs[:, m] = g
    acc = np.zeros(batch)
    for t in range(m, 0, -1):
        g = np.einsum("bij,bj->bi", kernels[t - 1], g)
        s = g.max(axis=1)
        safe = np.where(s > 0, s, 1.0)
        g = g / safe[:, None]
        acc = acc + _log(s)
        gs[:, t - 1] = g
        ls[:, t - 1] = acc
    return gs, ls


def hub_message_log(hub: HubFactor, target: str, incoming: dict, counter=None,
                    max_in_degree=DEFAULT_MAX_IN_DEGREE) -> np.ndarray:
    """Log message from the hub factor to ``target`` via per-configuration forward-backward."""
    m = hub.horizon
    others = [v for v in hub.scope if v != target]
    if len(others) > max_in_degree:
        raise InDegreeTooLarge(hub.node, len(others), max_in_degree)
    configs = _config_grid(len(others), m + 1)
    batch = configs.shape[0]
    weights = np.zeros(batch)
    for i, v in enumerate(others):
        weights = weights + np.asarray(incoming[v])[configs[:, i]]
    cps = {v: configs[:, i] for i, v in enumerate(others)}
    count(counter, 24 * batch * m)

    if target in hub.children:
        kernels, surv, fire_t = [], [], []
        for t in range(1, m + 1):
            st = hub._states(t, others, configs)
            kernels.append(hub._kernel(t, st, cps, batch, skip=target))
            f = hub._child_fire(target, t, st, batch)
            surv.append(1.0 - f)
            fire_t.append(f)
        fs, lfs = _forward(kernels, batch, emit=surv)
        gs, lgs = _backward(kernels, batch)
        out = np.empty((batch, m + 1))
        for j in range(m):
            step = np.einsum("bi,bij->bj", fs[:, j], kernels[j]) * fire_t[j]
            out[:, j] = _log((step * gs[:, j + 1]).sum(axis=1)) + lfs[:, j] + lgs[:, j + 1]
        out[:, m] = _log(fs[:, m].sum(axis=1)) + lfs[:, m]
    else:
        off_k, on_k = [], []
        for t in range(1, m + 1):
            off_k.append(hub._kernel(t, hub._states(t, others, configs, {target: 0}), cps, batch))
            on_k.append(hub._kernel(t, hub._states(t, others, configs, {target: 1}), cps, batch))
        fs, lfs = _forward(off_k, batch)
        gs, lgs = _backward(on_k, batch)
        out = _log((fs * gs).sum(axis=2)) + lfs + lgs
    return logsumexp(out + weights[:, None], axis=0)


def hub_slice_marginals(hub: HubFactor, incoming: dict, counter=None):
    """``P(C^t = 1 | evidence)`` for ``t = 1..M`` and the hub's log-normalizer.

    ``incoming`` must hold a log message for every scope variable.
    """
    m = hub.horizon
    names = list(hub.scope)
    configs = _config_grid(len(names), m + 1)
    batch = configs.shape[0]
    weights = np.zeros(batch)
    for i, v in enumerate(names):
        weights = weights + np.asarray(incoming[v])[configs[:, i]]
    cps = {v: configs[:, i] for i, v in enumerate(names)}
    kernels = [hub._kernel(t, hub._states(t, names, configs), cps, batch) for t in range(1, m + 1)]
    fs, lfs = _forward(kernels, batch)
    gs, lgs = _backward(kernels, batch)
    count(counter, 16 * batch * m)
    joint = _log(fs[:, 1:] * gs[:, 1:]) + (lfs[:, 1:] + lgs[:, 1:])[:, :, None] + weights[:, None, None]
    per_state = logsumexp(joint, axis=0)  # (M, 2)
    log_norm = logsumexp(per_state, axis=1)
    with np.errstate(invalid="ignore"):
        marg = np.exp(per_state[:, 1] - log_norm)
    log_z = float(logsumexp(_log(fs[:, m].sum(axis=1)) + lfs[:, m] + weights))
    return np.nan_to_num(marg), log_z


# ---------------------------------------------------------------------------
# kappa recurrence for the minimal pattern


def _minimal_tables(hub: HubFactor):
    trans = np.empty((2, 2))
    for i in (0, 1):
        trans[i, 1] = hub.fire[0, i, 0]
        trans[i, 0] = 1.0 - trans[i, 1]
    child = hub.children[0]
    return trans, hub.child_fire[child][0, :2].copy()


def kappa_table(trans, child_fire, horizon: int) -> np.ndarray:
    """Full table ``kappa[k, i, j]`` for ``k = 1..M+1`` (index 0 unused).

    ``trans[i, v] = P(C^k = v | C^{k-1} = i)`` and ``child_fire[v]`` is the
    child's firing probability given ``C^k = v``. Slices after the child's
    firing slice contribute exactly one, so the tail is set to 1 directly.
    """
    trans = np.asarray(trans, dtype=float)
    f = np.asarray(child_fire, dtype=float)
    m = horizon
    kap = np.ones((m + 2, 2, m + 1))
    for j in range(m + 1):
        for k in range(min(j + 1, m), 0, -1):
            phi = f if k == j + 1 else 1.0 - f
            kap[k, :, j] = trans @ (phi * kap[k + 1, :, j])
    return kap


def _kappa_column(trans, f, horizon, j):
    """Scaled column ``kappa[., ., j]``: values (M+2, 2) and log-scales (M+2,)."""
    m = horizon
    vals = np.ones((m + 2, 2))
    scale = np.zeros(m + 2)
    acc = 0.0
    for k in range(min(j + 1, m), 0, -1):
        phi = f if k == j + 1 else 1.0 - f
        v = trans @ (phi * vals[k + 1])
        s = v.max()
        if s > 0:
            v = v / s
            acc += np.log(s)
        else:
            acc = -np.inf
        vals[k] = v
        scale[k] = acc
    return vals, scale


def kappa_changepoint_log(trans, child_fire, horizon: int, counter=None) -> np.ndarray:
    """Log prior of the child's changepoint from two kappa columns.

    ``kappa^k(j) = kappa^{k+1}(j+1)`` lets column ``M - 1`` supply every
    ``j < M`` by an index shift: ``P(j) = kappa^{M-j}_0(M-1)``.
    """
    trans = np.asarray(trans, dtype=float)
    f = np.asarray(child_fire, dtype=float)
    m = horizon
    out = np.empty(m + 1)
    col_m, sc_m = _kappa_column(trans, f, m, m)
    out[m] = _log(col_m[1, 0]) + sc_m[1]
    if m >= 1:
        col, sc = _kappa_column(trans, f, m, m - 1)
        for j in range(m):
            k = m - j
            out[j] = _log(col[k, 0]) + sc[k]
    count(counter, 2 * 10 * (m + 1))
    return out


def nonpersistent_node_sumout(hub: HubFactor, target: str, incoming: dict | None = None,
                              counter=None, max_in_degree=DEFAULT_MAX_IN_DEGREE) -> MessageVector:
    """Message from a non-persistent node's factor to one persistent neighbour.

    Args:
        hub: the summed-out node and its neighbourhood.
        target: persistent neighbour receiving the message.
        incoming: log messages from every other scope variable.
    """
    if target not in hub.scope:
        raise KeyError(f"{target!r} is not a neighbour of {hub.node!r}")
    kind = PI if target in hub.children else LAMBDA
    if hub.is_minimal():
        trans, f = _minimal_tables(hub)
        return MessageVector.from_log(kappa_changepoint_log(trans, f, hub.horizon, counter), kind)
    return MessageVector.from_log(
        hub_message_log(hub, target, incoming or {}, counter, max_in_degree), kind
    )
