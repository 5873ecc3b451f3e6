import numpy as np
import pytest

from helpers import leaf_evidence, rand_node, rand_obs, random_evidence, random_polytree_net
from persistent_dbn.bench import forward_sample, gen_random_prototype
from persistent_dbn.errors import ShapeMismatch
from persistent_dbn.filtering import (
    FilterState,
    bk_filter,
    bk_fully_factored_step,
    error_rows,
    exact_filtering,
    fixed_window_filter,
    rms_error,
)
from persistent_dbn.model import EvidenceSet, NodeSpec, PrototypeNetwork, changepoint_transform
from persistent_dbn.oracle import enumerate_changepoint_posteriors


def hand_forward_filter(p, emission, obs):
    """Two-state forward recursion for one persistent node with one leaf."""
    belief, out = 0.0, []
    for o in obs:
        pred = belief + (1 - belief) * p
        on, off = pred * emission["1"][o], (1 - pred) * emission["0"][o]
        belief = on / (on + off)
        out.append(belief)
    return np.array(out)


def test_bk_single_node_is_exact_forward_filter():
    rng = np.random.default_rng(0)
    a = rand_node(rng, "A", lo=0.05, hi=0.3)
    o = rand_obs(rng, "O", "A")
    net = PrototypeNetwork([a], [o])
    m = 12
    ev = leaf_evidence(rng, net, m)
    obs = [ev.values[("O", t)] for t in range(1, m + 1)]
    expected = hand_forward_filter(a.cpd[""], o.emission, obs)
    run = bk_filter(net, ev, m)
    assert rms_error(run.marginals["A"], expected) <= 1e-10
    # with a single node the factored belief is exact
    assert np.max(np.abs(run.marginals["A"] - exact_filtering(net, ev, m).marginals["A"])) <= 1e-10


def test_bk_belief_of_one_stays_one():
    rng = np.random.default_rng(1)
    net = PrototypeNetwork([rand_node(rng, "A"), rand_node(rng, "B", ["A"])], [rand_obs(rng, "O", "B")])
    state = FilterState(3, {"A": 1.0, "B": 0.4})
    for t in range(4, 8):
        state = bk_fully_factored_step(net, state, {"O": "a"})
        assert state.belief["A"] == 1.0


def test_bk_step_counts_ops():
    from persistent_dbn.messages import OpCounter

    net = gen_random_prototype(7, seed=2)
    c = OpCounter()
    bk_fully_factored_step(net, FilterState.initial(net), {}, counter=c)
    assert c.count > 0


def test_bk_against_exact_on_tree_has_positive_error():
    net = gen_random_prototype(7, seed=3)
    m = 10
    ev = forward_sample(net, m, seed=4).evidence
    exact = exact_filtering(net, ev, m)
    bk = bk_filter(net, ev, m)
    err = rms_error(bk, exact)
    assert err.shape == (m,)
    assert np.all(err >= 0)
    assert err.max() > 1e-6
    assert err.max() < 1.0


def test_exact_filtering_matches_enumeration_on_prefixes():
    rng = np.random.default_rng(5)
    net = random_polytree_net(rng, 3, nonpersistent=1)
    m = 4
    ev = random_evidence(rng, net, m, fraction=0.3)
    run = exact_filtering(net, ev, m)
    for t in range(1, m + 1):
        ref = enumerate_changepoint_posteriors(changepoint_transform(net, t), ev.up_to(t))
        for k in net.node_ids:
            assert run.marginals[k][t - 1] == pytest.approx(ref.marginals[k][-1], abs=1e-10)


@pytest.mark.parametrize("window", [8, 12])
def test_window_covering_prefix_is_exact(window):
    net = gen_random_prototype(5, kind="polytree", seed=6)
    m = 8
    ev = forward_sample(net, m, seed=7).evidence
    exact = exact_filtering(net, ev, m)
    win = fixed_window_filter(net, ev, m, window)
    for k in net.node_ids:
        np.testing.assert_allclose(win.marginals[k], exact.marginals[k], atol=1e-10)


def test_window_one_uses_only_current_slice():
    net = gen_random_prototype(3, seed=8)
    m = 6
    ev = forward_sample(net, m, seed=9).evidence
    run = fixed_window_filter(net, ev, m, 1)
    one = changepoint_transform(net, 1)
    from persistent_dbn.inference import smooth

    for t in range(1, m + 1):
        local = EvidenceSet({(k, 1): v for (k, s), v in ev.values.items() if s == t})
        post = smooth(one, local)
        for k in net.node_ids:
            assert run.marginals[k][t - 1] == pytest.approx(post.marginals[k][0], abs=1e-13)


def test_window_rejects_nonpositive_width():
    net = gen_random_prototype(1, seed=0)
    with pytest.raises(ValueError):
        fixed_window_filter(net, EvidenceSet(), 3, 0)


def test_pinned_nodes_stay_on():
    net = PrototypeNetwork(
        [NodeSpec("A", (), True, {"": 0.2}), NodeSpec("B", ("A",), True, {"0": 0.1, "1": 0.3})],
    )
    ev = EvidenceSet({("A", 2): 1})
    m = 8
    run = fixed_window_filter(net, ev, m, 2, pin=True)
    assert run.pinned["A"] == 2
    np.testing.assert_allclose(run.marginals["A"][1:], 1.0)
    unpinned = fixed_window_filter(net, ev, m, 2)
    assert unpinned.marginals["A"][-1] < 1.0


def test_rms_error_examples():
    a = np.array([0.2, 0.5, 0.9])
    assert rms_error(a, a) == 0.0
    assert rms_error(a, a + np.array([0.0, 0.1, 0.0])) == pytest.approx(0.1, abs=1e-12)
    assert rms_error({"x": 0.3, "y": 0.7}, {"x": 0.3, "y": 0.6}) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ShapeMismatch):
        rms_error(a, a[:2])
    with pytest.raises(ShapeMismatch):
        rms_error({"x": 0.1}, {"y": 0.1})


def test_error_rows_per_step_and_mean():
    exact = {"x": np.array([0.1, 0.2, 0.3]), "y": np.array([0.0, 0.5, 1.0])}
    approx = {"x": np.array([0.1, 0.3, 0.3]), "y": np.array([0.0, 0.5, 0.8])}
    rows = error_rows("r0", "window", 2, approx, exact)
    assert [r["t"] for r in rows] == [1, 2, 3, "mean"]
    errs = [r["rms_error"] for r in rows[:3]]
    np.testing.assert_allclose(errs, [0.0, 0.1, 0.2], atol=1e-12)
    assert rows[-1]["rms_error"] == pytest.approx(0.1, abs=1e-12)
