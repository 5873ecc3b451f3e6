"""Random model builders and direct-definition formulas shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from persistent_dbn.model import EvidenceSet, NodeSpec, ObservationSpec, PrototypeNetwork, bit_keys


def rand_node(rng, node_id, parents=(), persistent=True, self_arc=False, lo=0.0, hi=1.0):
    n = len(parents) + (1 if self_arc else 0)
    return NodeSpec(node_id, tuple(parents), persistent,
                    {k: float(rng.uniform(lo, hi)) for k in bit_keys(n)})


def rand_obs(rng, obs_id, parent, k=2):
    alphabet = [chr(ord("a") + i) for i in range(k)]
    em = {}
    for s in ("0", "1"):
        p = rng.dirichlet(np.ones(k))
        em[s] = {a: float(v) for a, v in zip(alphabet, p)}
    return ObservationSpec(obs_id, parent, em)


def random_polytree_net(rng, n_hidden, max_parents=2, n_obs=None, nonpersistent=0):
    """Random polytree over ``H0..``; parents come from distinct components.

    ``nonpersistent`` of the roots are turned into isolated non-persistent
    nodes with a temporal self-arc when that keeps them isolated.
    """
    comp = list(range(n_hidden))

    def find(x):
        while comp[x] != x:
            x = comp[x]
        return x

    parents = []
    for i in range(n_hidden):
        roots = sorted({find(j) for j in range(i)})
        k = int(rng.integers(0, min(max_parents, len(roots)) + 1)) if roots else 0
        chosen = rng.choice(len(roots), size=k, replace=False) if k else []
        ps = []
        for c in chosen:
            members = [j for j in range(i) if find(j) == roots[c]]
            ps.append(int(members[rng.integers(len(members))]))
        for p in ps:
            comp[find(p)] = i
        parents.append(sorted(ps))
    nodes = []
    np_ids = set()
    children = {i: [c for c in range(n_hidden) if i in parents[c]] for i in range(n_hidden)}
    for i in range(n_hidden):
        nbrs = parents[i] + children[i]
        shares_child = any(q in np_ids for c in children[i] for q in parents[c])
        if (len(np_ids) < nonpersistent and not parents[i] and children[i]
                and not any(j in np_ids for j in nbrs) and not shares_child):
            np_ids.add(i)
    for i in range(n_hidden):
        persistent = i not in np_ids
        nodes.append(rand_node(rng, f"H{i}", [f"H{p}" for p in parents[i]], persistent,
                               self_arc=not persistent))
    leaves = [i for i in range(n_hidden) if not children[i] and i not in np_ids]
    if n_obs is not None:
        leaves = leaves[:n_obs]
    obs = [rand_obs(rng, f"O{i}", f"H{i}") for i in leaves]
    return PrototypeNetwork(nodes, obs)


def random_evidence(rng, net, horizon, fraction=0.3):
    """Persistence-consistent evidence read off one forward sample."""
    from persistent_dbn.bench import sample_trajectories

    hidden, observed = sample_trajectories(net, horizon, 1, rng)
    values = {}
    for k in net.node_ids:
        for t in range(1, horizon + 1):
            if rng.uniform() < fraction:
                values[(k, t)] = int(hidden[k][0, t - 1])
    for o in net.observations:
        for t in range(1, horizon + 1):
            if rng.uniform() < 2 * fraction:
                values[(o.id, t)] = o.alphabet[int(observed[o.id][0, t - 1])]
    return EvidenceSet(values)


def direct_transition(fire_off, fire_on, j, L):
    """``P(child changepoint j | parent changepoint L)`` straight from the
    trajectory semantics: survive each slice, then fire at ``j + 1``."""
    m = len(fire_off)
    rate = [fire_off[t - 1] if t <= L else fire_on[t - 1] for t in range(1, m + 1)]
    p = 1.0
    for t in range(1, j + 1):
        p *= 1.0 - rate[t - 1]
    if j < m:
        p *= rate[j]
    return p


def direct_lambda_parts(fire_off, fire_on, lam):
    """``below``, ``after`` and ``never`` summands of the child-to-parent
    message by double loop over ``(L, j)``."""
    m = len(fire_off)
    below, after, never = np.zeros(m + 1), np.zeros(m + 1), np.zeros(m + 1)
    for L in range(m + 1):
        for j in range(m + 1):
            v = direct_transition(fire_off, fire_on, j, L) * lam[j]
            if j == m:
                never[L] += v
            elif j < L:
                below[L] += v
            else:
                after[L] += v
    return below, after, never


def direct_pi_parts(fire_off, fire_on, pi):
    """``before``, ``after`` and ``never`` summands of the parent-to-child
    message by double loop over ``(j, L)``."""
    m = len(fire_off)
    before, after, never = np.zeros(m + 1), np.zeros(m + 1), np.zeros(m + 1)
    for j in range(m + 1):
        for L in range(m + 1):
            v = direct_transition(fire_off, fire_on, j, L) * pi[L]
            if j == m:
                never[j] += v
            elif j < L:
                before[j] += v
            else:
                after[j] += v
    return before, after, never


def direct_family(fire, parent_cps, j):
    """``P(j | parent changepoints)`` for a multi-parent node; parent 0 is the
    most significant bit of the CPD key."""
    m, width = fire.shape
    d = len(parent_cps)
    p = 1.0
    for t in range(1, m + 1):
        code = sum(int(z < t) << (d - 1 - r) for r, z in enumerate(parent_cps))
        f = fire[t - 1, code]
        if t <= j:
            p *= 1.0 - f
        elif t == j + 1:
            p *= f
    return p


def wide_zigzag_net(rng, width=8):
    """Polytree of ``width`` roots ``R_i`` and ``width - 1`` children
    ``C_i`` with parents ``(R_i, R_{i+1})``; each child has one leaf ``O_i``.

    Unrolling it over a few dozen slices gives a wide interaction graph,
    which is hard for elimination on the unrolled network.
    """
    nodes = [rand_node(rng, f"R{i}", lo=0.02, hi=0.2) for i in range(width)]
    nodes += [rand_node(rng, f"C{i}", [f"R{i}", f"R{i + 1}"], lo=0.02, hi=0.3) for i in range(width - 1)]
    obs = [rand_obs(rng, f"O{i}", f"C{i}") for i in range(width - 1)]
    return PrototypeNetwork(nodes, obs)


def leaf_evidence(rng, net, horizon):
    """Every observation leaf observed at every slice, values drawn at random."""
    values = {}
    for o in net.observations:
        alphabet = sorted(o.emission["0"])
        for t in range(1, horizon + 1):
            values[(o.id, t)] = alphabet[int(rng.integers(len(alphabet)))]
    return EvidenceSet(values)


def minimal_pattern(rng, trans=None, child=None):
    """Non-persistent ``Y`` with a temporal self-arc feeding persistent ``C``."""
    y = NodeSpec("Y", (), False, trans or {"0": float(rng.uniform()), "1": float(rng.uniform())})
    c = NodeSpec("C", ("Y",), True, child or {"0": float(rng.uniform()), "1": float(rng.uniform())})
    return PrototypeNetwork([y, c])


def trajectory_enumeration(net, m):
    """``P(C~ = j)`` by summing over all ``2**m`` trajectories of ``Y``."""
    y, c = net.node("Y"), net.node("C")
    out = np.zeros(m + 1)
    for traj in itertools.product((0, 1), repeat=m):
        p, prev = 1.0, 0
        for v in traj:
            p1 = y.cpd[str(prev)]
            p *= p1 if v else 1 - p1
            prev = v
        for j in range(m + 1):
            q = 1.0
            for t in range(1, m + 1):
                f = c.cpd[str(traj[t - 1])]
                if t <= j:
                    q *= 1 - f
                elif t == j + 1:
                    q *= f
            out[j] += p * q
    return out


def rel_close(a, b, rtol=1e-10):
    """Elementwise relative closeness that also accepts exact zeros on both sides."""
    a, b = np.asarray(a), np.asarray(b)
    scale = np.maximum(np.abs(b), 1e-300)
    assert np.all((np.abs(a - b) <= rtol * scale) | ((a == 0) & (b == 0))), (a, b)
