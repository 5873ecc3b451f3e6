"""Timestamped observations and their changepoint potentials."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    ContradictoryEvidence,
    DuplicateObservation,
    SchemaViolation,
    UnknownObservationValue,
)
from ..messages import LAMBDA, MessageVector
from .network import PrototypeNetwork


@dataclass(frozen=True)
class EvidenceSet:
    """Observations keyed by ``(node id, slice)``; slices are 1-based."""

    values: dict[tuple[str, int], object] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows) -> "EvidenceSet":
        values = {}
        for node, t, value in rows:
            key = (str(node), int(t))
            if key in values:
                raise DuplicateObservation(*key)
            values[key] = value
        return cls(values)

    def rows(self) -> list[tuple[str, int, object]]:
        return [(n, t, v) for (n, t), v in sorted(self.values.items(), key=lambda kv: (kv[0][1], kv[0][0]))]

    def __len__(self):
        return len(self.values)

    def for_node(self, node_id: str) -> dict[int, object]:
        return {t: v for (n, t), v in self.values.items() if n == node_id}

    def up_to(self, t_max: int) -> "EvidenceSet":
        return EvidenceSet({k: v for k, v in self.values.items() if k[1] <= t_max})

    def window(self, start: int, stop: int) -> "EvidenceSet":
        """Observations in slices ``start..stop`` re-indexed so ``start`` is slice 1."""
        return EvidenceSet(
            {(n, t - start + 1): v for (n, t), v in self.values.items() if start <= t <= stop}
        )

    def with_values(self, extra: dict) -> "EvidenceSet":
        merged = dict(self.values)
        merged.update(extra)
        return EvidenceSet(merged)


def check_evidence(ev: EvidenceSet, net: PrototypeNetwork, horizon: int | None = None) -> None:
    """Referential and persistence checks against a network.

    Raises:
        SchemaViolation: unknown node, slice out of range, non-binary hidden value.
        UnknownObservationValue: symbol outside an observation node's alphabet.
        ContradictoryEvidence: a persistent node observed on before it is observed off.
    """
    hidden = {n.id: n for n in net.nodes}
    observed = {o.id: o for o in net.observations}
    for (node, t), value in ev.values.items():
        if node not in hidden and node not in observed:
            raise SchemaViolation("evidence.node", f"unknown node {node!r}")
        if t < 1 or (horizon is not None and t > horizon):
            raise SchemaViolation("evidence.t", f"slice {t} outside 1..{horizon}")
        if node in hidden:
            if str(value) not in ("0", "1"):
                raise SchemaViolation("evidence.value", f"{node!r} is binary, got {value!r}")
        elif str(value) not in observed[node].alphabet:
            raise UnknownObservationValue(node, value)
    for node in net.persistent_ids:
        _interval(node, ev.for_node(node))


def _interval(node: str, obs: dict[int, object]) -> tuple[int, int]:
    """Bounds ``lo <= j < hi`` on the changepoint implied by observations."""
    ones = [t for t, v in obs.items() if str(v) == "1"]
    zeros = [t for t, v in obs.items() if str(v) == "0"]
    first_on = min(ones) if ones else None
    last_off = max(zeros) if zeros else 0
    if first_on is not None and zeros and first_on < last_off:
        raise ContradictoryEvidence(node, first_on, last_off)
    return last_off, first_on


def evidence_to_lambda(node: str, ev: EvidenceSet, horizon: int) -> MessageVector:
    """Indicator over changepoints consistent with the node's own observations.

    Observing ``X^t = 0`` forces ``j >= t`` and ``X^s = 1`` forces ``j < s``;
    the result is one on the surviving interval and zero elsewhere.
    """
    lo, first_on = _interval(node, {t: v for t, v in ev.for_node(node).items()})
    hi = horizon + 1 if first_on is None else first_on
    vec = np.zeros(horizon + 1)
    vec[lo:hi] = 1.0
    return MessageVector(vec, kind=LAMBDA)
