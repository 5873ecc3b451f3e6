"""Changepoint transformation of a persistent DBN.

A persistent binary variable observed over slices ``1..M`` can only follow
one of ``M + 1`` trajectories ``0...01...1``. Its changepoint ``j`` is the
last slice at which it is off (``j = 0``: on from slice 1, ``j = M``: never
fires), so ``X^t = 1`` exactly when ``j < t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import HorizonZero, UnsupportedStructure
from .network import PrototypeNetwork, ValidationReport, bit_keys, validate_prototype


def sequence_from_changepoint(j: int, horizon: int) -> tuple[int, ...]:
    return tuple(int(t > j) for t in range(1, horizon + 1))


def changepoint_from_sequence(bits) -> int | None:
    """Changepoint of a binary trajectory, or ``None`` if it violates persistence."""
    bits = [int(b) for b in bits]
    j = len(bits) - sum(bits)
    if any(bits[:j]) or not all(bits[j:]):
        return None
    return j


@dataclass(frozen=True, eq=False)
class ChangepointModel:
    """Per-slice CPD tables of a prototype unrolled over ``horizon`` slices.

    ``fire[k][t-1, c]`` is ``P(X_k^t = 1 | X_k^{t-1} = 0, parents = c)`` for a
    persistent node, with ``c`` the integer value of the parent bit-string.
    Non-persistent nodes carry an extra axis for their own previous state:
    ``fire[k][t-1, prev, c]``. ``survival[k][i, c]`` is the running product of
    ``1 - fire`` over slices ``1..i`` with parents held at ``c``.
    """

    network: PrototypeNetwork
    horizon: int
    report: ValidationReport
    fire: dict[str, np.ndarray]
    survival: dict[str, np.ndarray]
    log_survival: dict[str, np.ndarray]
    stationary: dict[str, bool]
    emissions: dict[str, np.ndarray]
    alphabets: dict[str, tuple[str, ...]]
    start: int = 1

    @property
    def size(self) -> int:
        return self.horizon + 1

    def parents(self, node_id: str) -> tuple[str, ...]:
        return self.network.node(node_id).parents

    def is_persistent(self, node_id: str) -> bool:
        return self.network.node(node_id).persistent

    def prior_changepoint(self, node_id: str) -> np.ndarray:
        """Changepoint distribution of a parentless persistent node."""
        f = self.fire[node_id][:, 0]
        surv = self.survival[node_id][:, 0]
        out = np.empty(self.size)
        out[:-1] = surv[:-1] * f
        out[-1] = surv[-1]
        return out


def changepoint_transform(net: PrototypeNetwork, horizon: int, *, start: int = 1) -> ChangepointModel:
    """Tabulate the changepoint model of ``net`` over ``horizon`` slices.

    ``start`` is the absolute slice that becomes local slice 1; it only matters
    when the network carries per-slice CPD overrides.
    """
    if not isinstance(horizon, (int, np.integer)) or isinstance(horizon, bool) or horizon < 1:
        raise HorizonZero(horizon)
    horizon = int(horizon)
    report = validate_prototype(net)
    if not report.supported:
        raise UnsupportedStructure("; ".join(report.issues))

    fire, survival, log_survival, stationary = {}, {}, {}, {}
    for node in net.nodes:
        keys = bit_keys(len(node.parents))
        overrides = net.nonstationary.get(node.id, {})
        stationary[node.id] = not any(
            start <= int(t) < start + horizon for t in overrides
        )
        if node.persistent:
            table = np.empty((horizon, len(keys)))
            for t in range(horizon):
                rows = net.cpd_at(node.id, start + t)
                table[t] = [float(rows[k]) for k in keys]
            table.setflags(write=False)
            fire[node.id] = table
            with np.errstate(divide="ignore"):
                logs = np.log1p(-table)
            cum = np.ones((horizon + 1, len(keys)))
            cum[1:] = np.cumprod(1.0 - table, axis=0)
            lcum = np.zeros((horizon + 1, len(keys)))
            lcum[1:] = np.cumsum(logs, axis=0)
            for arr in (cum, lcum):
                arr.setflags(write=False)
            survival[node.id] = cum
            log_survival[node.id] = lcum
        else:
            table = np.empty((horizon, 2, len(keys)))
            for t in range(horizon):
                rows = net.cpd_at(node.id, start + t)
                for prev in (0, 1):
                    if node.has_self_arc:
                        table[t, prev] = [float(rows[str(prev) + k]) for k in keys]
                    else:
                        table[t, prev] = [float(rows[k]) for k in keys]
            table.setflags(write=False)
            fire[node.id] = table

    emissions, alphabets = {}, {}
    for obs in net.observations:
        alpha = obs.alphabet
        em = np.array([[float(obs.emission[s][a]) for a in alpha] for s in ("0", "1")])
        em.setflags(write=False)
        emissions[obs.id] = em
        alphabets[obs.id] = alpha

    return ChangepointModel(
        network=net,
        horizon=horizon,
        report=report,
        fire=fire,
        survival=survival,
        log_survival=log_survival,
        stationary=stationary,
        emissions=emissions,
        alphabets=alphabets,
        start=start,
    )
