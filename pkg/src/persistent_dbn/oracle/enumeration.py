"""Brute-force joint enumeration, over changepoints and over raw trajectories."""

from __future__ import annotations

import itertools
from math import prod

import numpy as np
from scipy.special import logsumexp

from ..errors import BudgetExceeded, SchemaViolation
from ..messages import OpCounter, count
from ..model.evidence import EvidenceSet
from ..model.network import PrototypeNetwork, bit_keys
from ..model.transform import ChangepointModel
from ..posterior import PosteriorTable, ZeroEvidenceProbability, marginals_from_changepoint

DEFAULT_ENUM_BUDGET = 10**7


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _states(var_kind: str, horizon: int) -> np.ndarray:
    """``(domain, M)`` on/off table of each value of a variable."""
    t = np.arange(1, horizon + 1)
    if var_kind == "cp":
        j = np.arange(horizon + 1)
        return (j[:, None] < t[None, :]).astype(np.int64)
    k = np.arange(2**horizon)
    return ((k[:, None] >> (t[None, :] - 1)) & 1).astype(np.int64)


def _observed_symbols(model: ChangepointModel, obs_id: str, ev: EvidenceSet):
    alpha = model.alphabets[obs_id]
    idx = {}
    for t, v in ev.for_node(obs_id).items():
        if str(v) not in alpha:
            raise SchemaViolation(obs_id, f"symbol {v!r} not in alphabet")
        idx[t] = alpha.index(str(v))
    return idx


def changepoint_log_joint(model: ChangepointModel, ev: EvidenceSet | None = None,
                          budget: int = DEFAULT_ENUM_BUDGET, counter: OpCounter | None = None):
    """Dense log joint with one axis per hidden node, in declaration order.

    A persistent node's axis is its changepoint ``0..M``; a non-persistent
    node's axis is its trajectory code, bit ``t-1`` holding slice ``t``.
    Returns ``(log_joint, states)`` with ``states[k][value]`` the node's 0/1
    sequence for each axis value.

    Raises:
        BudgetExceeded: the joint has more than ``budget`` entries.
    """
    ev = ev or EvidenceSet()
    net, M = model.network, model.horizon
    hidden = net.node_ids
    kind = {k: "cp" if model.is_persistent(k) else "traj" for k in hidden}
    states = {k: _states(kind[k], M) for k in hidden}
    shape = [states[k].shape[0] for k in hidden]
    total = prod(shape)
    if total > budget:
        raise BudgetExceeded(total, budget, "changepoint enumeration")
    axis = {k: i for i, k in enumerate(hidden)}
    joint = np.zeros(shape)

    def add(vars_, table):
        order = sorted(vars_, key=axis.get)
        perm = [vars_.index(v) for v in order]
        t = np.transpose(table, perm)
        view = [shape[axis[v]] if v in vars_ else 1 for v in hidden]
        np.add(joint, t.reshape(view), out=joint)
        count(counter, total)

    for k in hidden:
        parents = list(model.parents(k))
        d = len(parents)
        dom = [states[p].shape[0] for p in parents]
        xs = states[k]
        table = np.empty((xs.shape[0], *dom))
        t_idx = np.arange(M)
        for cfg in itertools.product(*(range(n) for n in dom)):
            code = np.zeros(M, dtype=np.int64)
            for r, (p, v) in enumerate(zip(parents, cfg)):
                code += states[p][v] << (d - 1 - r)
            if kind[k] == "cp":
                f = model.fire[k][t_idx, code]
                # P(j) = prod_{t<=j} (1 - f_t) * f_{j+1}; j = M never fires
                logs = np.array([
                    _log(np.prod(1.0 - f[:j])) + (_log(f[j]) if j < M else 0.0)
                    for j in range(M + 1)
                ])
            else:
                fire = model.fire[k]
                prev = np.concatenate([np.zeros((xs.shape[0], 1), dtype=np.int64), xs[:, :-1]], axis=1)
                p1 = fire[t_idx[None, :], prev, code[None, :]]
                logs = _log(np.where(xs == 1, p1, 1.0 - p1)).sum(axis=1)
            table[(slice(None), *cfg)] = logs
        add([k] + parents, table)

        own = ev.for_node(k)
        if own:
            ok = np.ones(xs.shape[0], dtype=bool)
            for t, v in own.items():
                ok &= xs[:, t - 1] == int(v)
            add([k], np.where(ok, 0.0, -np.inf))
        for obs in net.observations_of(k):
            em = model.emissions[obs.id]
            lik = np.zeros(xs.shape[0])
            for t, a in _observed_symbols(model, obs.id, ev).items():
                lik += _log(em[xs[:, t - 1], a])
            add([k], lik)

    return joint, states


def enumerate_changepoint_posteriors(model: ChangepointModel, ev: EvidenceSet | None = None,
                                     budget: int = DEFAULT_ENUM_BUDGET,
                                     counter: OpCounter | None = None):
    """Exact posteriors by summing the dense joint over every changepoint
    configuration (and every trajectory of the non-persistent nodes).

    Raises:
        BudgetExceeded: the joint has more than ``budget`` entries.
    """
    joint, states = changepoint_log_joint(model, ev, budget, counter)
    hidden = model.network.node_ids
    axis = {k: i for i, k in enumerate(hidden)}
    M = model.horizon
    log_z = float(logsumexp(joint))
    if not np.isfinite(log_z):
        return ZeroEvidenceProbability(op_count=counter.count if counter else 0)
    post = np.exp(joint - log_z)
    changepoint, marginals = {}, {}
    for k in hidden:
        others = tuple(i for i in range(len(hidden)) if i != axis[k])
        dist = post.sum(axis=others)
        if model.is_persistent(k):
            changepoint[k] = dist
            marginals[k] = marginals_from_changepoint(dist)
        else:
            marginals[k] = dist @ states[k]
    return PosteriorTable(M, changepoint, marginals, log_z, op_count=counter.count if counter else 0)


def binary_log_joint(net: PrototypeNetwork, horizon: int, ev: EvidenceSet | None = None,
                     budget: int = DEFAULT_ENUM_BUDGET):
    """Log probability of every raw 0/1 trajectory of the unrolled network.

    Persistent nodes switch on with their CPD row and stay on with probability
    1, so persistence-violating trajectories get ``-inf`` on their own.
    Returns ``(log_p, x)`` with ``x[s, h, t-1]`` the state of hidden node
    ``h`` at slice ``t`` in trajectory ``s``.

    Raises:
        BudgetExceeded: ``2**(N*M)`` exceeds ``budget``.
    """
    ev = ev or EvidenceSet()
    hidden = net.node_ids
    H, M = len(hidden), horizon
    total = 2 ** (H * M)
    if total > budget:
        raise BudgetExceeded(total, budget, "trajectory enumeration")
    s = np.arange(total, dtype=np.int64)
    pos = {k: i for i, k in enumerate(hidden)}
    x = np.empty((total, H, M), dtype=np.int64)
    for h in range(H):
        for t in range(M):
            x[:, h, t] = (s >> (h * M + t)) & 1

    logp = np.zeros(total)
    for k in hidden:
        node = net.node(k)
        h = pos[k]
        keys = bit_keys(len(node.parents))
        for t in range(M):
            rows = net.cpd_at(k, t + 1)
            code = np.zeros(total, dtype=np.int64)
            for p in node.parents:
                code = code * 2 + x[:, pos[p], t]
            prev = x[:, h, t - 1] if t > 0 else np.zeros(total, dtype=np.int64)
            if node.persistent:
                row = np.array([rows[key] for key in keys])
                p1 = np.where(prev == 1, 1.0, row[code])
            elif node.has_self_arc:
                row = np.array([[rows[str(b) + key] for key in keys] for b in (0, 1)])
                p1 = row[prev, code]
            else:
                row = np.array([rows[key] for key in keys])
                p1 = row[code]
            logp += _log(np.where(x[:, h, t] == 1, p1, 1.0 - p1))
        for t, v in ev.for_node(k).items():
            logp[x[:, h, t - 1] != int(v)] = -np.inf
    for obs in net.observations:
        h = pos[obs.parent]
        for t, v in ev.for_node(obs.id).items():
            e = np.array([obs.prob(v, 0), obs.prob(v, 1)])
            logp += _log(e[x[:, h, t - 1]])
    return logp, x


def enumerate_binary_dbn_posteriors(net: PrototypeNetwork, horizon: int, ev: EvidenceSet | None = None,
                                    budget: int = DEFAULT_ENUM_BUDGET):
    """Exact posteriors by summing over every raw 0/1 trajectory.

    Raises:
        BudgetExceeded: ``2**(N*M)`` exceeds ``budget``.
    """
    logp, x = binary_log_joint(net, horizon, ev, budget)
    hidden = net.node_ids
    pos = {k: i for i, k in enumerate(hidden)}
    M = horizon
    log_z = float(logsumexp(logp))
    if not np.isfinite(log_z):
        return ZeroEvidenceProbability()
    w = np.exp(logp - log_z)
    marginals, changepoint = {}, {}
    for k in hidden:
        h = pos[k]
        marginals[k] = w @ x[:, h, :]
        if net.node(k).persistent:
            j = M - x[:, h, :].sum(axis=1)
            changepoint[k] = np.bincount(j, weights=w, minlength=M + 1)
    return PosteriorTable(M, changepoint, marginals, log_z)
