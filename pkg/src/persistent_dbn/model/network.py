"""Prototype (one-slice) network and its structural validation."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from ..errors import (
    CyclicGraph,
    NonIsolatedNonPersistent,
    SchemaViolation,
    UnnormalizedCpd,
)

CPD_TOL = 1e-12


def bit_keys(n: int) -> list[str]:
    """All bit-strings of length ``n`` in counting order ("00", "01", ...)."""
    return ["".join(bits) for bits in itertools.product("01", repeat=n)]


@dataclass(frozen=True)
class NodeSpec:
    """A hidden binary node of the prototype.

    ``cpd`` maps a bit-string of parent states (declared parent order, "01" is
    first parent off and second on) to ``P(node = 1 | parents)``. For a
    persistent node this is the firing probability while the node is still
    off. A non-persistent node may instead key its rows by its own previous
    state followed by the parent bits, which gives it a temporal self-arc.
    """

    id: str
    parents: tuple[str, ...]
    persistent: bool
    cpd: dict[str, float]

    @property
    def has_self_arc(self) -> bool:
        if self.persistent:
            return True
        return any(len(k) == len(self.parents) + 1 for k in self.cpd)

    def fire_prob(self, parent_key: str, prev: int = 0) -> float:
        if not self.persistent and self.has_self_arc:
            return self.cpd[str(prev) + parent_key]
        return self.cpd[parent_key]


@dataclass(frozen=True)
class ObservationSpec:
    """Observed leaf with a single hidden parent and a categorical emission.

    ``emission["0"]`` and ``emission["1"]`` are distributions over the
    alphabet given the parent being off or on.
    """

    id: str
    parent: str
    emission: dict[str, dict[str, float]]

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(self.emission["0"])

    def prob(self, symbol, parent_state: int) -> float:
        return self.emission[str(parent_state)][str(symbol)]


@dataclass(frozen=True)
class PrototypeNetwork:
    nodes: tuple[NodeSpec, ...]
    observations: tuple[ObservationSpec, ...] = ()
    # node id -> slice (1-based) -> cpd rows replacing the stationary ones
    nonstationary: dict[str, dict[int, dict[str, float]]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "observations", tuple(self.observations))

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    @property
    def persistent_ids(self) -> list[str]:
        return [n.id for n in self.nodes if n.persistent]

    @property
    def nonpersistent_ids(self) -> list[str]:
        return [n.id for n in self.nodes if not n.persistent]

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def observation(self, obs_id: str) -> ObservationSpec:
        for o in self.observations:
            if o.id == obs_id:
                return o
        raise KeyError(obs_id)

    def is_observation(self, node_id: str) -> bool:
        return any(o.id == node_id for o in self.observations)

    def children(self) -> dict[str, list[str]]:
        """Hidden children of every hidden node, in declaration order."""
        out = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for p in n.parents:
                out[p].append(n.id)
        return out

    def observations_of(self, node_id: str) -> list[ObservationSpec]:
        return [o for o in self.observations if o.parent == node_id]

    def cpd_at(self, node_id: str, t: int) -> dict[str, float]:
        """CPD rows in force at slice ``t`` (1-based)."""
        base = self.node(node_id).cpd
        override = self.nonstationary.get(node_id, {}).get(t)
        if not override:
            return base
        merged = dict(base)
        merged.update(override)
        return merged

    def topological_order(self) -> list[str]:
        indeg = {n.id: len(n.parents) for n in self.nodes}
        kids = self.children()
        queue = deque(i for i in self.node_ids if indeg[i] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in kids[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.nodes):
            raise CyclicGraph(i for i in self.node_ids if indeg[i] > 0)
        return order


@dataclass(frozen=True)
class ValidationReport:
    structure: str  # "chain" | "tree" | "polytree" | "dag"
    nonpersistent: tuple[str, ...]
    max_in_degree: int
    supported: bool
    issues: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "structure": self.structure,
            "nonpersistent": list(self.nonpersistent),
            "max_in_degree": self.max_in_degree,
            "supported": self.supported,
            "issues": list(self.issues),
        }


def _check_rows(node_id, rows: dict[str, float], expected: list[str]):
    for key in expected:
        if key not in rows:
            raise UnnormalizedCpd(node_id, key, "missing row")
    for key, p in rows.items():
        if key not in expected:
            raise UnnormalizedCpd(node_id, key, "unexpected row key")
        p = float(p)
        # a binary row is (1 - p, p); it sums to one iff p is a probability
        if not (-CPD_TOL <= p <= 1 + CPD_TOL):
            raise UnnormalizedCpd(node_id, key, f"probability {p} outside [0, 1]")


def _expected_keys(node: NodeSpec) -> list[str]:
    d = len(node.parents)
    if not node.persistent and node.has_self_arc:
        return bit_keys(d + 1)
    return bit_keys(d)


def validate_prototype(net: PrototypeNetwork) -> ValidationReport:
    """Check a prototype and classify its structure.

    Raises:
        SchemaViolation: duplicate ids or references to unknown nodes.
        CyclicGraph: the parent relation is not a DAG.
        UnnormalizedCpd: a CPD or emission row is not a distribution.
        NonIsolatedNonPersistent: a non-persistent hidden node touches another
            non-persistent node.
    """
    ids = net.node_ids + [o.id for o in net.observations]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("nodes.id", "duplicate node id")
    hidden = set(net.node_ids)
    for n in net.nodes:
        for p in n.parents:
            if p not in hidden:
                raise SchemaViolation(f"nodes[{n.id}].parents", f"unknown parent {p!r}")
        if len(set(n.parents)) != len(n.parents):
            raise SchemaViolation(f"nodes[{n.id}].parents", "repeated parent")
    for o in net.observations:
        if o.parent not in hidden:
            raise SchemaViolation(f"observation_nodes[{o.id}].parent", f"unknown parent {o.parent!r}")

    net.topological_order()

    for n in net.nodes:
        _check_rows(n.id, n.cpd, _expected_keys(n))
    for node_id, per_slice in net.nonstationary.items():
        if node_id not in hidden:
            raise SchemaViolation("nonstationary", f"unknown node {node_id!r}")
        expected = _expected_keys(net.node(node_id))
        for t, rows in per_slice.items():
            if int(t) < 1:
                raise SchemaViolation(f"nonstationary[{node_id}]", f"slice {t} < 1")
            _check_rows(node_id, rows, [k for k in expected if k in rows])
    for o in net.observations:
        if set(o.emission) != {"0", "1"}:
            raise UnnormalizedCpd(o.id, "emission", "needs rows '0' and '1'")
        if set(o.emission["0"]) != set(o.emission["1"]):
            raise UnnormalizedCpd(o.id, "emission", "rows use different alphabets")
        for row, dist in o.emission.items():
            if any(float(v) < 0 for v in dist.values()):
                raise UnnormalizedCpd(o.id, row, "negative probability")
            if abs(sum(float(v) for v in dist.values()) - 1.0) > CPD_TOL:
                raise UnnormalizedCpd(o.id, row)

    kids = net.children()
    persistent = set(net.persistent_ids)
    issues = []
    for n in net.nodes:
        if n.persistent:
            continue
        for nb in list(n.parents) + kids[n.id]:
            if nb not in persistent:
                raise NonIsolatedNonPersistent(n.id, nb)
        for o in net.observations_of(n.id):
            raise NonIsolatedNonPersistent(n.id, o.id)
    for n in net.nodes:
        np_parents = [p for p in n.parents if p not in persistent]
        if len(np_parents) > 1:
            issues.append(f"{n.id} has more than one non-persistent parent")

    # undirected acyclicity over hidden nodes (observation leaves cannot close a cycle)
    root_of = {i: i for i in hidden}

    def find(x):
        while root_of[x] != x:
            root_of[x] = root_of[root_of[x]]
            x = root_of[x]
        return x

    loopy = False
    for n in net.nodes:
        for p in n.parents:
            a, b = find(n.id), find(p)
            if a == b:
                loopy = True
            else:
                root_of[a] = b

    max_in = max((len(n.parents) for n in net.nodes), default=0)
    n_children = {i: len(kids[i]) + len(net.observations_of(i)) for i in hidden}
    components = len({find(i) for i in hidden})
    if loopy:
        structure = "dag"
        issues.append("undirected skeleton has a cycle; exact engine needs a polytree")
    elif max_in >= 2:
        structure = "polytree"
    elif components <= 1 and all(c <= 1 for c in n_children.values()):
        structure = "chain"
    else:
        structure = "tree"
    return ValidationReport(
        structure=structure,
        nonpersistent=tuple(net.nonpersistent_ids),
        max_in_degree=max_in,
        supported=not issues,
        issues=tuple(issues),
    )
