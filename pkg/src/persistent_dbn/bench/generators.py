"""Seeded random prototypes and forward sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpec
from ..model.evidence import EvidenceSet
from ..model.network import NodeSpec, ObservationSpec, PrototypeNetwork, bit_keys

TREE = "tree"
POLYTREE = "polytree"
ACCURACY = "accuracy"
SPEED = "speed"


def _random_obs(rng, obs_id: str, parent: str) -> ObservationSpec:
    p_off, p_on = rng.uniform(size=2)
    return ObservationSpec(obs_id, parent, {
        "0": {"0": float(1.0 - p_off), "1": float(p_off)},
        "1": {"0": float(1.0 - p_on), "1": float(p_on)},
    })


def _random_node(rng, node_id: str, parents) -> NodeSpec:
    keys = bit_keys(len(parents))
    return NodeSpec(node_id, tuple(parents), True, {k: float(v) for k, v in zip(keys, rng.uniform(size=len(keys)))})


def _tree_parents(n: int) -> list[list[int]]:
    # heap layout: node i hangs under (i - 1) // 2
    return [[] if i == 0 else [(i - 1) // 2] for i in range(n)]


def _polytree_parents(rng, n: int, max_in_degree: int) -> list[list[int]]:
    """Grow a polytree node by node; a new node takes parents from distinct
    components so the skeleton never closes a loop."""
    comp = list(range(n))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    parents = []
    for i in range(n):
        roots = sorted({find(j) for j in range(i)})
        if len(roots) >= 2 and max_in_degree >= 2:
            k = min(max_in_degree, len(roots), 2)
            chosen = rng.choice(len(roots), size=k, replace=False)
            ps = []
            for c in sorted(chosen):
                members = [j for j in range(i) if find(j) == roots[c]]
                ps.append(int(members[rng.integers(len(members))]))
        elif i > 0 and (rng.uniform() < 0.25 or max_in_degree < 2):
            ps = [int(rng.integers(i))]
        else:
            ps = []
        for p in ps:
            comp[find(p)] = find(i)
        parents.append(sorted(ps))
    return parents


def gen_random_prototype(n: int, kind: str = TREE, *, seed: int = 0, max_in_degree: int = 2) -> PrototypeNetwork:
    """Random prototype on ``n`` hidden persistent nodes ``X0..X{n-1}``.

    Tree mode lays the nodes out as a heap-indexed binary tree, so it is a
    full binary tree when ``n = 2**k - 1``. Polytree mode grows a random
    polytree with in-degree at most ``max_in_degree``. Every hidden node
    without hidden children gets one binary observation leaf ``O<i>``. All
    CPT entries are uniform on [0, 1].

    Raises:
        InvalidSpec: ``n < 1`` or an unknown kind.
    """
    if n < 1:
        raise InvalidSpec(f"need at least one hidden node, got {n}")
    if max_in_degree < 1:
        raise InvalidSpec(f"max in-degree must be positive, got {max_in_degree}")
    rng = np.random.default_rng(seed)
    if kind == TREE:
        structure = _tree_parents(n)
    elif kind == POLYTREE:
        structure = _polytree_parents(rng, n, max_in_degree)
    else:
        raise InvalidSpec(f"unknown generator kind {kind!r}")
    nodes = [_random_node(rng, f"X{i}", [f"X{p}" for p in ps]) for i, ps in enumerate(structure)]
    has_child = {p for ps in structure for p in ps}
    obs = [_random_obs(rng, f"O{i}", f"X{i}") for i in range(n) if i not in has_child]
    return PrototypeNetwork(nodes, obs)


@dataclass(frozen=True)
class Sample:
    """A forward-sampled run: hidden 0/1 trajectories, leaf symbols, evidence."""

    hidden: dict[str, np.ndarray]
    observed: dict[str, list[str]]
    evidence: EvidenceSet


def sample_trajectories(net: PrototypeNetwork, horizon: int, size: int, rng: np.random.Generator):
    """Draw ``size`` independent runs at once.

    Returns ``(hidden, observed)``: ``hidden[k]`` is a ``(size, M)`` 0/1 array
    and ``observed[o]`` a ``(size, M)`` array of alphabet indices.
    """
    hidden = {k: np.zeros((size, horizon), dtype=np.int64) for k in net.node_ids}
    observed = {o.id: np.zeros((size, horizon), dtype=np.int64) for o in net.observations}
    order = net.topological_order()
    for t in range(1, horizon + 1):
        for k in order:
            node = net.node(k)
            rows = net.cpd_at(k, t)
            keys = bit_keys(len(node.parents))
            code = np.zeros(size, dtype=np.int64)
            for p in node.parents:
                code = code * 2 + hidden[p][:, t - 1]
            prev = hidden[k][:, t - 2] if t > 1 else np.zeros(size, dtype=np.int64)
            if not node.persistent and node.has_self_arc:
                table = np.array([[rows[str(b) + key] for key in keys] for b in (0, 1)])
                p1 = table[prev, code]
            else:
                p1 = np.array([rows[key] for key in keys])[code]
                if node.persistent:
                    p1 = np.where(prev == 1, 1.0, p1)
            hidden[k][:, t - 1] = (rng.uniform(size=size) < p1).astype(np.int64)
        for o in net.observations:
            cdf = np.cumsum([[o.emission[s][a] for a in o.alphabet] for s in ("0", "1")], axis=1)
            u = rng.uniform(size=size)
            rows = cdf[hidden[o.parent][:, t - 1]]
            idx = (u[:, None] >= rows).sum(axis=1)
            observed[o.id][:, t - 1] = np.minimum(idx, len(o.alphabet) - 1)
    return hidden, observed


def forward_sample(net: PrototypeNetwork, horizon: int, seed: int = 0, mode: str = ACCURACY,
                   fraction: float = 0.10) -> Sample:
    """Sample every variable slice by slice under absorbing persistence.

    Accuracy mode observes every leaf at every slice. Speed mode observes
    ``round(fraction * N * M)`` hidden node-slices drawn uniformly without
    replacement, read off the sampled trajectory.
    """
    if mode not in (ACCURACY, SPEED):
        raise InvalidSpec(f"unknown sampling mode {mode!r}")
    rng = np.random.default_rng(seed)
    h, o = sample_trajectories(net, horizon, 1, rng)
    hidden = {k: v[0] for k, v in h.items()}
    observed = {}
    for obs in net.observations:
        observed[obs.id] = [obs.alphabet[i] for i in o[obs.id][0]]

    if mode == ACCURACY:
        values = {(k, t + 1): s for k, seq in observed.items() for t, s in enumerate(seq)}
    else:
        cells = [(k, t) for k in net.node_ids for t in range(1, horizon + 1)]
        n_obs = int(round(fraction * len(cells)))
        pick = rng.choice(len(cells), size=n_obs, replace=False)
        values = {cells[i]: int(hidden[cells[i][0]][cells[i][1] - 1]) for i in sorted(pick)}
    return Sample(hidden, observed, EvidenceSet(values))
