"""Fully factored Boyen-Koller filtering on the two-slice model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..messages import OpCounter
from ..model.evidence import EvidenceSet
from ..model.network import PrototypeNetwork, bit_keys
from ..oracle.factors import FactorTable, min_fill_order, product, variable_elimination
from ..posterior import ZeroEvidenceProbability


@dataclass(frozen=True)
class FilterState:
    """Per-node ``P(X^t = 1)`` after slice ``t``; ``t = 0`` is the all-off start.

    ``pinned`` maps a node to the slice from which it is known to be on.
    """

    t: int
    belief: dict[str, float]
    pinned: dict[str, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, net: PrototypeNetwork) -> "FilterState":
        return cls(0, {k: 0.0 for k in net.node_ids})


def _transition_table(net: PrototypeNetwork, node_id: str, t: int, with_prev: bool) -> np.ndarray:
    node = net.node(node_id)
    rows = net.cpd_at(node_id, t)
    keys = bit_keys(len(node.parents))
    shape = (2,) + ((2,) if with_prev else ()) + (2,) * len(node.parents)
    table = np.empty(shape)
    for prev in ((0, 1) if with_prev else (0,)):
        for key in keys:
            if node.persistent:
                p1 = 1.0 if prev == 1 else rows[key]
            elif node.has_self_arc:
                p1 = rows[str(prev) + key]
            else:
                p1 = rows[key]
            idx = ((prev,) if with_prev else ()) + tuple(int(b) for b in key)
            table[(1,) + idx] = p1
            table[(0,) + idx] = 1.0 - p1
    return table


def two_slice_factors(net: PrototypeNetwork, state: FilterState, slice_evidence: dict) -> list[FactorTable]:
    """Factored prior on slice ``t`` times the slice ``t+1`` CPDs and evidence.

    Variables are ``(node, 0)`` for slice ``t`` and ``(node, 1)`` for ``t+1``.
    """
    t = state.t + 1
    factors = []
    for node in net.nodes:
        uses_prev = node.persistent or node.has_self_arc
        b = float(state.belief[node.id])
        if uses_prev:
            factors.append(FactorTable(((node.id, 0),), np.array([1.0 - b, b])))
        variables = ((node.id, 1),) + (((node.id, 0),) if uses_prev else ()) + tuple((p, 1) for p in node.parents)
        factors.append(FactorTable(variables, _transition_table(net, node.id, t, uses_prev)))
    hidden = set(net.node_ids)
    for o in net.observations:
        if o.id in slice_evidence:
            v = slice_evidence[o.id]
            factors.append(FactorTable(((o.parent, 1),), np.array([o.prob(v, 0), o.prob(v, 1)])))
    fixed = {(k, 1): int(v) for k, v in slice_evidence.items() if k in hidden}
    if fixed:
        factors = [f.reduce({v: fixed[v] for v in f.variables if v in fixed}) for f in factors]
    return factors


def bk_fully_factored_step(net: PrototypeNetwork, state: FilterState, slice_evidence: dict | None = None,
                           counter: OpCounter | None = None):
    """Advance one slice: exact inference on the two-slice model, then
    projection onto a product of single-node marginals.

    ``slice_evidence`` maps node or observation ids to their value at ``t+1``.
    Returns the new state, or ZeroEvidenceProbability.
    """
    slice_evidence = slice_evidence or {}
    factors = two_slice_factors(net, state, slice_evidence)
    # every query lives on the new slice, so the old slice is summed out once
    for k in net.node_ids:
        v = (k, 0)
        bucket = [f for f in factors if v in f.variables]
        if bucket:
            factors = [f for f in factors if v not in f.variables]
            factors.append(product(bucket, counter).marginalize([v], counter))
    domains = {}
    for f in factors:
        domains.update(f.domains())
    order, _ = min_fill_order([f.variables for f in factors], domains, budget=None)
    belief = {}
    for k in net.node_ids:
        if k in slice_evidence:
            belief[k] = float(int(slice_evidence[k]))
            continue
        joint, log_z = variable_elimination(factors, query=((k, 1),), order=order, budget=None, counter=counter)
        if not np.isfinite(log_z):
            return ZeroEvidenceProbability(op_count=counter.count if counter else 0)
        belief[k] = float(joint.table[1])
    if len(belief) == len(slice_evidence):
        _, log_z = variable_elimination(factors, order=order, budget=None, counter=counter)
        if not np.isfinite(log_z):
            return ZeroEvidenceProbability(op_count=counter.count if counter else 0)
    return FilterState(state.t + 1, belief)


def slice_evidence_at(ev: EvidenceSet, t: int) -> dict:
    return {n: v for (n, s), v in ev.values.items() if s == t}


@dataclass(frozen=True, eq=False)
class FilterRun:
    """Filtered marginals ``marginals[k][t-1] = P(X_k^t = 1 | ...)`` and the
    operation count spent at each slice."""

    marginals: dict[str, np.ndarray]
    step_ops: np.ndarray
    pinned: dict[str, int] = field(default_factory=dict)

    def at(self, t: int) -> dict[str, float]:
        return {k: float(v[t - 1]) for k, v in self.marginals.items()}


def bk_filter(net: PrototypeNetwork, ev: EvidenceSet, horizon: int):
    """Run the fully factored filter over ``horizon`` slices."""
    state = FilterState.initial(net)
    out = {k: np.zeros(horizon) for k in net.node_ids}
    ops = np.zeros(horizon, dtype=np.int64)
    for t in range(1, horizon + 1):
        c = OpCounter()
        state = bk_fully_factored_step(net, state, slice_evidence_at(ev, t), c)
        if isinstance(state, ZeroEvidenceProbability):
            return state
        ops[t - 1] = c.count
        for k, b in state.belief.items():
            out[k][t - 1] = b
    return FilterRun(out, ops)
