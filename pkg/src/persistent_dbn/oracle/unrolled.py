"""Exact baseline: variable elimination on the fully unrolled network."""

from __future__ import annotations

import numpy as np

from ..errors import MemoryBudgetExceeded
from ..messages import OpCounter
from ..model.evidence import EvidenceSet
from ..model.network import PrototypeNetwork, bit_keys
from ..posterior import PosteriorTable, ZeroEvidenceProbability
from .factors import DEFAULT_VE_BUDGET, FactorTable, induced_peak, min_fill_order, variable_elimination


def unrolled_factors(net: PrototypeNetwork, horizon: int, ev: EvidenceSet | None = None) -> list[FactorTable]:
    """One CPD factor per hidden node-slice plus emission factors for observed
    leaves; hidden evidence is applied by slicing. Variables are ``(id, t)``."""
    ev = ev or EvidenceSet()
    factors = []
    for node in net.nodes:
        keys = bit_keys(len(node.parents))
        d = len(node.parents)
        for t in range(1, horizon + 1):
            rows = net.cpd_at(node.id, t)
            self_arc = t > 1 and node.has_self_arc
            variables = [(node.id, t)] + ([(node.id, t - 1)] if self_arc else []) + [(p, t) for p in node.parents]
            table = np.empty((2,) + (2,) * (len(variables) - 1))
            for prev in (0, 1):
                if not self_arc and prev == 1:
                    continue
                for ki, key in enumerate(keys):
                    if node.persistent:
                        p1 = 1.0 if prev == 1 else rows[key]
                    elif node.has_self_arc:
                        p1 = rows[str(prev) + key]
                    else:
                        p1 = rows[key]
                    bits = tuple(int(b) for b in key)
                    idx = ((prev,) if self_arc else ()) + bits
                    table[(1,) + idx] = p1
                    table[(0,) + idx] = 1.0 - p1
            if d == 0 and not self_arc:
                table = table.reshape(2)
            factors.append(FactorTable(tuple(variables), table))
    for obs in net.observations:
        for t, v in ev.for_node(obs.id).items():
            factors.append(FactorTable(((obs.parent, t),), np.array([obs.prob(v, 0), obs.prob(v, 1)])))
    hidden = set(net.node_ids)
    fixed = {(n, t): int(v) for (n, t), v in ev.values.items() if n in hidden}
    if fixed:
        factors = [f.reduce({v: fixed[v] for v in f.variables if v in fixed}) for f in factors]
    return factors


def ve_exact_unrolled(net: PrototypeNetwork, horizon: int, ev: EvidenceSet | None = None, order=None,
                      query=None, budget: int | None = DEFAULT_VE_BUDGET,
                      counter: OpCounter | None = None):
    """Per-slice marginals of the ``query`` nodes (default: every hidden node)
    by one elimination run per queried node-slice. ``query`` may also list
    ``(node, t)`` pairs to restrict the work to those cells; marginals of
    unqueried cells are then left at 0.

    The elimination order defaults to min-fill over the whole unrolled graph
    and is reused for every query. Observed node-slices report their value.

    Raises:
        MemoryBudgetExceeded: an intermediate table would exceed ``budget`` entries.
    """
    ev = ev or EvidenceSet()
    query = list(net.node_ids if query is None else query)
    cells = [q for q in query if isinstance(q, tuple)]
    query = list(dict.fromkeys(q[0] if isinstance(q, tuple) else q for q in query))
    factors = unrolled_factors(net, horizon, ev)
    domains = {}
    for f in factors:
        domains.update(f.domains())
    scopes = [f.variables for f in factors]
    if order is None:
        order, _ = min_fill_order(scopes, domains, budget=budget)
    if cells:
        targets = [c for c in cells if c in domains]
    else:
        targets = [(k, t) for k in query for t in range(1, horizon + 1) if (k, t) in domains]
    for q in targets:
        # keeping a query variable can only enlarge cliques; check before any work
        induced = induced_peak(scopes, domains, [v for v in order if v != q])
        if budget is not None and induced > budget:
            raise MemoryBudgetExceeded(induced, budget, "variable elimination")

    log_z = None
    marginals = {k: np.zeros(horizon) for k in query}
    for k in query:
        for t, v in ev.for_node(k).items():
            marginals[k][t - 1] = float(int(v))
    for q in targets:
        joint, lz = variable_elimination(factors, query=(q,), order=order, budget=budget, counter=counter)
        if not np.isfinite(lz):
            return ZeroEvidenceProbability(op_count=counter.count if counter else 0)
        log_z = lz
        marginals[q[0]][q[1] - 1] = float(joint.table[1])
    if log_z is None:
        _, log_z = variable_elimination(factors, order=order, budget=budget, counter=counter)
        if not np.isfinite(log_z):
            return ZeroEvidenceProbability(op_count=counter.count if counter else 0)
    changepoint = {}
    for k in query:
        if net.node(k).persistent and not cells:
            m = np.concatenate([[0.0], marginals[k], [1.0]])
            changepoint[k] = np.clip(np.diff(m), 0.0, None)
    return PosteriorTable(horizon, changepoint, marginals, log_z, op_count=counter.count if counter else 0)
